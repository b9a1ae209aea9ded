"""Island-model self-adaptive differential evolution with tolerance-scheduled
constrained selection.

Eight (configurable) islands evolve independent populations, each with one of
four classic mutation strategies and binomial crossover; the scale factor and
crossover probability ride along with every individual and occasionally
regenerate (rate 0.1, scale factor in [0.1, 1]).  Selection follows the
feasibility rules with a tolerance on the maximum constraint violation that
decays geometrically over generations.  A ring migration exchanges copies of
the best individuals every ``migration_interval`` generations, alternating
direction each event, and a partial restart ("epidemic") redraws all but the
top tenth of a stagnant island.

Runs are deterministic for a fixed seed regardless of worker count: islands
own independent RNG streams spawned from the master seed, evolve in
whole-interval chunks between migration barriers, and all merges are ordered
by island index.
"""

from __future__ import annotations

import math
import os
import pickle
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .config import OptimizerSettings

__all__ = [
    "EpsSchedule", "Individual", "Island", "RunResult", "History",
    "STRATEGIES", "eps_level", "eps_compare", "mutate",
    "crossover_binomial", "self_adapt", "reflect_into_bounds", "run",
]

STRATEGIES = ("rand1", "best1", "target_to_best1", "best2")
_DONORS_NEEDED = {"rand1": 3, "best1": 2, "target_to_best1": 2, "best2": 4}

_ADAPT_RATE = 0.1
_F_LOW, _F_SPAN = 0.1, 0.9


@dataclass(frozen=True)
class EpsSchedule:
    """Feasibility tolerance decay over generations."""

    start: float = 0.05
    final: float = 1e-8
    ramp_from: float = 0.0   # generation where the decay begins
    ramp_to: float = 1.0     # generation where the floor is reached

    def level(self, generation: float) -> float:
        if generation <= self.ramp_from:
            return self.start
        if generation >= self.ramp_to:
            return self.final
        frac = (generation - self.ramp_from) / (self.ramp_to - self.ramp_from)
        return self.start * (self.final / self.start) ** frac

    @classmethod
    def for_settings(cls, s: OptimizerSettings) -> "EpsSchedule":
        return cls(start=s.eps_start, final=s.eps_final,
                   ramp_from=s.generations * s.ramp_start_frac,
                   ramp_to=float(s.generations))


def eps_level(generation: float, schedule: EpsSchedule) -> float:
    return schedule.level(generation)


@dataclass(frozen=True)
class Individual:
    x: np.ndarray
    scale_factor: float
    crossover_prob: float
    fitness: float
    violations: np.ndarray
    violation_max: float


def eps_compare(a: Individual, b: Individual, eps: float) -> Individual:
    """Winner of challenger ``a`` against incumbent ``b`` (ties keep ``b``)."""
    fa = a.violation_max <= eps
    fb = b.violation_max <= eps
    if fa and fb:
        return a if a.fitness > b.fitness else b
    if fa != fb:
        return a if fa else b
    return a if a.violation_max < b.violation_max else b


def self_adapt(scale_factor: float, crossover_prob: float, rng: np.random.Generator,
               rate: float = _ADAPT_RATE) -> tuple[float, float]:
    """Per-trial parameter regeneration (each with probability ``rate``)."""
    if rng.random() < rate:
        scale_factor = _F_LOW + _F_SPAN * rng.random()
    if rng.random() < rate:
        crossover_prob = rng.random()
    return scale_factor, crossover_prob


def mutate(x: np.ndarray, donors: np.ndarray, scale_factor: float, strategy: str,
           x_best: np.ndarray | None = None) -> np.ndarray:
    """Donor vector for one target; ``donors`` rows are distinct non-target
    population members (as many as the strategy consumes)."""
    f = scale_factor
    if strategy == "rand1":
        return donors[0] + f * (donors[1] - donors[2])
    if strategy == "best1":
        return x_best + f * (donors[0] - donors[1])
    if strategy == "target_to_best1":
        return x + f * (x_best - x) + f * (donors[0] - donors[1])
    if strategy == "best2":
        return x_best + f * (donors[0] - donors[1]) + f * (donors[2] - donors[3])
    raise ValueError(f"unknown strategy {strategy!r}")


def crossover_binomial(target: np.ndarray, donor: np.ndarray, crossover_prob: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Binomial crossover with one forced donor component."""
    d = len(target)
    mask = rng.random(d) < crossover_prob
    mask[rng.integers(d)] = True
    return np.where(mask, donor, target)


def reflect_into_bounds(x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Fold components back inside the box by reflection off the bounds."""
    width = upper - lower
    z = np.mod(x - lower, 2.0 * width)
    z = np.where(z > width, 2.0 * width - z, z)
    return lower + z


class Island:
    """One population with its strategy, RNG stream and adaptive parameters."""

    __slots__ = ("index", "strategy", "rng", "x", "f", "cr", "fit", "psi",
                 "psimax", "stagnation", "progress", "best_key", "best_payload",
                 "epidemics")

    def __init__(self, index: int, strategy: str, rng: np.random.Generator,
                 size: int, dim: int, k: int):
        self.index = index
        self.strategy = strategy
        self.rng = rng
        self.x = np.empty((size, dim))
        self.f = np.full(size, 0.5)
        self.cr = np.full(size, 0.9)
        self.fit = np.empty(size)
        self.psi = np.empty((size, k))
        self.psimax = np.empty(size)
        self.stagnation = 0
        self.progress: tuple | None = None
        self.best_key: tuple | None = None
        self.best_payload: tuple | None = None
        self.epidemics = 0

    def seed_population(self, lower, upper, problem, audit) -> None:
        n = self.x.shape[0]
        self.x[:] = lower + self.rng.random(self.x.shape) * (upper - lower)
        self.fit[:], self.psi[:] = _checked_eval(problem, self.x, lower, upper, audit)
        self.psimax[:] = _violation_max(self.psi)

    def best_index(self, eps: float) -> int:
        return int(_ranking(self.fit, self.psimax, eps)[0])


def _violation_max(psi: np.ndarray) -> np.ndarray:
    if psi.shape[1] == 0:
        return np.zeros(psi.shape[0])
    return np.maximum(psi, 0.0).max(axis=1)


def _ranking(fit: np.ndarray, psimax: np.ndarray, eps: float) -> np.ndarray:
    """Population indices best-to-worst under the selection rules (stable)."""
    feas = psimax <= eps
    primary = np.where(feas, 0.0, 1.0)
    secondary = np.where(feas, -fit, psimax)
    return np.lexsort((secondary, primary))


def _checked_eval(problem, xs, lower, upper, audit) -> tuple[np.ndarray, np.ndarray]:
    audit["evaluations"] += xs.shape[0]
    audit["out_of_bounds"] += int(np.sum(np.any((xs < lower) | (xs > upper), axis=1)))
    return problem.evaluate_batch(xs)


def _final_key(fitness: float, psimax: float, eps_final: float) -> tuple:
    """Ordering used for the reported optimum (final tolerance)."""
    if psimax <= eps_final:
        return (0, -fitness)
    return (1, psimax)


def _track_best(island: Island, eps_final: float) -> None:
    order = _ranking(island.fit, island.psimax, eps_final)
    i = int(order[0])
    key = _final_key(island.fit[i], island.psimax[i], eps_final)
    if island.best_key is None or key < island.best_key:
        island.best_key = key
        island.best_payload = (island.x[i].copy(), island.f[i], island.cr[i],
                               island.fit[i], island.psi[i].copy(), island.psimax[i])


def _evolve_chunk(island: Island, problem, g_start: int, n_gens: int,
                  sched: EpsSchedule, settings: OptimizerSettings,
                  audit: dict) -> np.ndarray:
    """Evolve one island for ``n_gens`` generations; returns history rows
    (generation, best fitness, best violation, eps)."""
    lower, upper = problem.lower, problem.upper
    n, d = island.x.shape
    rng = island.rng
    strategy = island.strategy
    need = _DONORS_NEEDED[strategy]
    hist = np.empty((n_gens, 4))

    for g_off in range(n_gens):
        gen = g_start + g_off
        eps = sched.level(gen)

        order = _ranking(island.fit, island.psimax, eps)
        best_i = int(order[0])
        x_best = island.x[best_i]

        # distinct non-target donor rows
        rows = np.argsort(rng.random((n, n)), axis=1, kind="stable")
        donors = np.empty((n, need), dtype=np.intp)
        for i in range(n):
            row = rows[i]
            donors[i] = row[row != i][:need]

        # per-trial parameter regeneration (jDE draws, fixed order)
        f_trial = np.where(rng.random(n) < _ADAPT_RATE,
                           _F_LOW + _F_SPAN * rng.random(n), island.f)
        cr_trial = np.where(rng.random(n) < _ADAPT_RATE, rng.random(n), island.cr)

        fcol = f_trial[:, None]
        xd = island.x
        if strategy == "rand1":
            donor = xd[donors[:, 0]] + fcol * (xd[donors[:, 1]] - xd[donors[:, 2]])
        elif strategy == "best1":
            donor = x_best + fcol * (xd[donors[:, 0]] - xd[donors[:, 1]])
        elif strategy == "target_to_best1":
            donor = xd + fcol * (x_best - xd) + fcol * (xd[donors[:, 0]] - xd[donors[:, 1]])
        else:
            donor = (x_best + fcol * (xd[donors[:, 0]] - xd[donors[:, 1]])
                     + fcol * (xd[donors[:, 2]] - xd[donors[:, 3]]))

        mask = rng.random((n, d)) < cr_trial[:, None]
        mask[np.arange(n), rng.integers(0, d, n)] = True
        trial = np.where(mask, donor, xd)
        trial = reflect_into_bounds(trial, lower, upper)

        fit_t, psi_t = _checked_eval(problem, trial, lower, upper, audit)
        psimax_t = _violation_max(psi_t)

        feas_t = psimax_t <= eps
        feas_i = island.psimax <= eps
        wins = np.where(feas_t & feas_i, fit_t > island.fit,
                        np.where(feas_t ^ feas_i, feas_t, psimax_t < island.psimax))
        if np.any(wins):
            island.x[wins] = trial[wins]
            island.f[wins] = f_trial[wins]
            island.cr[wins] = cr_trial[wins]
            island.fit[wins] = fit_t[wins]
            island.psi[wins] = psi_t[wins]
            island.psimax[wins] = psimax_t[wins]

        _track_best(island, sched.final)

        order = _ranking(island.fit, island.psimax, eps)
        best_i = int(order[0])
        hist[g_off] = (gen, island.fit[best_i], island.psimax[best_i], eps)

        # stagnation bookkeeping and partial restart
        prog = _final_key(island.fit[best_i], island.psimax[best_i], sched.final)
        if island.progress is None or prog[0] < island.progress[0] or (
                prog[0] == island.progress[0]
                and island.progress[1] - prog[1] > 1e-12):
            island.progress = prog
            island.stagnation = 0
        else:
            island.stagnation += 1
        if island.stagnation >= settings.epidemic_patience:
            keep = max(1, math.ceil(settings.epidemic_keep_frac * n))
            order = _ranking(island.fit, island.psimax, eps)
            redraw = order[keep:]
            m = len(redraw)
            island.x[redraw] = lower + rng.random((m, d)) * (upper - lower)
            island.f[redraw] = _F_LOW + _F_SPAN * rng.random(m)
            island.cr[redraw] = rng.random(m)
            fit_r, psi_r = _checked_eval(problem, island.x[redraw], lower, upper, audit)
            island.fit[redraw] = fit_r
            island.psi[redraw] = psi_r
            island.psimax[redraw] = _violation_max(psi_r)
            island.stagnation = 0
            island.progress = None
            island.epidemics += 1
            _track_best(island, sched.final)

    return hist


def _migrate(islands: list[Island], event_index: int, eps: float, count: int) -> None:
    """Ring migration: copies of each island's best replace the next island's
    worst; direction alternates with the event index."""
    n_isl = len(islands)
    if n_isl < 2 or count < 1:
        return
    count = min(count, islands[0].x.shape[0])
    packets = []
    for isl in islands:
        order = _ranking(isl.fit, isl.psimax, eps)
        take = order[:count]
        packets.append((isl.x[take].copy(), isl.f[take].copy(), isl.cr[take].copy(),
                        isl.fit[take].copy(), isl.psi[take].copy(),
                        isl.psimax[take].copy()))
    step = 1 if event_index % 2 == 0 else -1
    for src in range(n_isl):
        dst = islands[(src + step) % n_isl]
        order = _ranking(dst.fit, dst.psimax, eps)
        worst = order[::-1][:count]
        x, f, cr, fit, psi, psimax = packets[src]
        dst.x[worst] = x
        dst.f[worst] = f
        dst.cr[worst] = cr
        dst.fit[worst] = fit
        dst.psi[worst] = psi
        dst.psimax[worst] = psimax


@dataclass
class History:
    """Per-restart, per-island convergence traces."""

    eps: list = field(default_factory=list)         # [restart][gen]
    best_fit: list = field(default_factory=list)    # [restart][island][gen]
    best_psi: list = field(default_factory=list)
    epidemics: int = 0
    migrations: int = 0


@dataclass
class RunResult:
    best: Individual | None
    feasible: bool
    history: History
    evaluations: int
    out_of_bounds: int
    reached_generation: int | None
    restart_bests: list


_WORKER_PROBLEM = None


def _worker_init(payload: bytes) -> None:
    global _WORKER_PROBLEM
    _WORKER_PROBLEM = pickle.loads(payload)


def _worker_chunk(args):
    island, g_start, n_gens, sched, settings = args
    audit = {"evaluations": 0, "out_of_bounds": 0}
    hist = _evolve_chunk(island, _WORKER_PROBLEM, g_start, n_gens, sched,
                         settings, audit)
    return island, hist, audit


def _effective_workers(settings: OptimizerSettings, islands: int) -> int:
    w = settings.workers if settings.workers > 0 else (os.cpu_count() or 1)
    cap = os.environ.get("ASCENTOPT_WORKERS")
    if cap:
        w = min(w, max(1, int(cap)))
    return max(1, min(w, islands))


def run(problem, settings: OptimizerSettings, target_fitness: float | None = None
        ) -> RunResult:
    """Full optimization: restarts x (islands evolving in migration chunks).

    ``target_fitness`` enables early termination (checked at chunk barriers so
    serial and parallel runs stop identically) once the running optimum is
    feasible at the final tolerance and reaches the target.
    """
    sched = EpsSchedule.for_settings(settings)
    n_isl = settings.islands
    n_gen = settings.generations
    interval = settings.migration_interval
    dim = len(problem.lower)
    k = problem.n_constraints
    workers = _effective_workers(settings, n_isl)

    history = History()
    audit = {"evaluations": 0, "out_of_bounds": 0}
    global_best: tuple | None = None   # (key, restart, island, payload)
    restart_bests = []
    reached: int | None = None

    pool = None
    try:
        if workers > 1:
            ctx = get_context("fork")
            pool = ctx.Pool(workers, initializer=_worker_init,
                            initargs=(pickle.dumps(problem),))

        master = np.random.SeedSequence(settings.seed)
        restart_seeds = master.spawn(settings.restarts)
        for r in range(settings.restarts):
            islands = []
            for i, ss in enumerate(restart_seeds[r].spawn(n_isl)):
                isl = Island(i, STRATEGIES[i % len(STRATEGIES)],
                             np.random.default_rng(ss), settings.population, dim, k)
                isl.seed_population(problem.lower, problem.upper, problem, audit)
                _track_best(isl, sched.final)
                islands.append(isl)

            eps_trace = []
            fit_trace = [[] for _ in range(n_isl)]
            psi_trace = [[] for _ in range(n_isl)]
            g = 0
            event = 0
            stop = False
            while g < n_gen and not stop:
                n_chunk = min(interval, n_gen - g)
                if pool is not None:
                    tasks = [(isl, g, n_chunk, sched, settings) for isl in islands]
                    results = pool.map(_worker_chunk, tasks)
                    results.sort(key=lambda t: t[0].index)
                    islands = []
                    for isl, hist, aud in results:
                        islands.append(isl)
                        audit["evaluations"] += aud["evaluations"]
                        audit["out_of_bounds"] += aud["out_of_bounds"]
                        fit_trace[isl.index].extend(hist[:, 1])
                        psi_trace[isl.index].extend(hist[:, 2])
                        if isl.index == 0:
                            eps_trace.extend(hist[:, 3])
                else:
                    for isl in islands:
                        hist = _evolve_chunk(isl, problem, g, n_chunk, sched,
                                             settings, audit)
                        fit_trace[isl.index].extend(hist[:, 1])
                        psi_trace[isl.index].extend(hist[:, 2])
                        if isl.index == 0:
                            eps_trace.extend(hist[:, 3])
                g += n_chunk
                if g < n_gen:
                    _migrate(islands, event, sched.level(g), settings.migration_count)
                    event += 1
                    history.migrations += 1

                if target_fitness is not None:
                    for isl in islands:
                        if (isl.best_key is not None and isl.best_key[0] == 0
                                and -isl.best_key[1] >= target_fitness):
                            stop = True
                    if stop and reached is None:
                        reached = g

            history.epidemics += sum(isl.epidemics for isl in islands)
            history.eps.append(np.array(eps_trace))
            history.best_fit.append([np.array(t) for t in fit_trace])
            history.best_psi.append([np.array(t) for t in psi_trace])

            r_best: tuple | None = None
            for isl in islands:
                if isl.best_key is None:
                    continue
                cand = (isl.best_key, r, isl.index, isl.best_payload)
                if r_best is None or cand[0] < r_best[0]:
                    r_best = cand
                if global_best is None or cand[0] < global_best[0]:
                    global_best = cand
            restart_bests.append(_payload_to_individual(r_best[3]) if r_best else None)
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    best = _payload_to_individual(global_best[3]) if global_best else None
    feasible = bool(global_best and global_best[0][0] == 0)
    return RunResult(best=best, feasible=feasible, history=history,
                     evaluations=audit["evaluations"],
                     out_of_bounds=audit["out_of_bounds"],
                     reached_generation=reached, restart_bests=restart_bests)


def _payload_to_individual(payload) -> Individual:
    x, f, cr, fit, psi, psimax = payload
    return Individual(x=x, scale_factor=float(f), crossover_prob=float(cr),
                      fitness=float(fit), violations=psi,
                      violation_max=float(psimax))
