"""Trajectory propagation, constraint evaluation and the optimization problem.

`propagate` runs the full ten-arc flight for one decision vector and returns
a dense :class:`Trajectory`; `evaluate` is the lean fast path the optimizer
calls (objective plus the eleven normalized constraint residuals, no sample
storage).  Both are pure functions of (vector, mission), so any number may
run concurrently.

Residual normalization: each path/pressure residual is divided by its limit,
the apsis residuals by the target radius, inclination is left in degrees.
Crashed or non-finite propagations return a graded sentinel in
[1e6, 2e6] (later failure ranks marginally better); unresolvable motors get
the full 2e6.  Any sentinel ranks strictly worse than every finite residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend as _backend
from ._kernelspec import (O_CRASH_T, O_DV_AERO, O_DV_GRAV, O_DV_MIS,
                          O_DV_PROP, O_ECC, O_ECC_T8, O_ELEM8_OK, O_ELEM_OK,
                          O_ENERGY, O_INCL, O_MASS_F, O_NFEV, O_RA, O_RA_T8,
                          O_RP, O_RP_T8, O_SMA, O_SMA_T8, O_STATUS, O_T_END,
                          O_VF, O_VI, O_WAX1, O_WAX1_T, O_WAX2, O_WAX2_T,
                          O_WHEAT, O_WHEAT_T, O_WQ, O_WQ_T, O_WQA, O_WQA_T,
                          SAMPLE_COLUMNS, STATUS_OK, FlightPlan, StaticTables,
                          plan_from_vector, static_from_config)
from .config import DECISION_NAMES, MissionConfig
from .srm import ResolutionError, ResolvedPressureLaw

__all__ = ["State", "Trajectory", "EvalResult", "AscentProblem",
           "evaluate", "propagate", "N_CONSTRAINTS", "SENTINEL"]

N_CONSTRAINTS = 11
SENTINEL = 1.0e6

CONSTRAINT_NAMES = (
    "dynamic_pressure", "bending_load", "heat_flux", "axial_acceleration",
    "pitch_rate", "apoapsis", "periapsis", "inclination",
    "peak_pressure", "tailoff_convexity", "tailoff_zero",
)


@dataclass(frozen=True)
class State:
    """Inertial point-mass state."""

    r: np.ndarray   # m
    v: np.ndarray   # m/s
    m: float        # kg
    t: float        # s


@dataclass(frozen=True)
class EvalResult:
    fitness: float        # payload mass, kg (maximized)
    psi: np.ndarray       # (11,) normalized residuals
    out: np.ndarray | None
    law: ResolvedPressureLaw | None

    @property
    def psi_max(self) -> float:
        return float(max(0.0, np.max(self.psi)))


@dataclass(frozen=True)
class Trajectory:
    """Dense propagation product for reporting and export."""

    samples: np.ndarray            # (n, 15), columns SAMPLE_COLUMNS
    boundaries: np.ndarray         # (11, 8): t, r(3), v(3), m  (SI)
    psi: np.ndarray
    constraint_worst: dict[str, dict[str, float]]
    terminal: dict[str, float]
    dv: dict[str, float]
    v_i: float
    v_f: float
    final_mass: float
    status: int
    law: ResolvedPressureLaw
    transfer_orbit: dict[str, float]
    rhs_evaluations: int

    @property
    def psi_max(self) -> float:
        return float(max(0.0, np.max(self.psi)))

    @property
    def crashed(self) -> bool:
        return self.status != 0

    def states(self) -> list[State]:
        """Arc-boundary states (after any staging drop)."""
        return [State(r=row[1:4].copy(), v=row[4:7].copy(), m=row[7], t=row[0])
                for row in self.boundaries]


def _failed_psi() -> np.ndarray:
    return np.full(N_CONSTRAINTS, 2.0 * SENTINEL)


def _assemble_psi(cfg: MissionConfig, static: StaticTables, x: np.ndarray,
                  law: ResolvedPressureLaw, plan: FlightPlan,
                  out: np.ndarray) -> np.ndarray:
    psi = np.empty(N_CONSTRAINTS)
    lim = cfg.limits
    rate = (90.0 - float(x[6])) / float(x[1])
    psi[4] = (rate - lim.pitch_rate_max) / lim.pitch_rate_max
    psi[8] = law.meop_residual / law.max_operating_pressure
    psi[9] = law.convexity_residual
    psi[10] = law.tail_zero_residual

    if out[O_STATUS] != STATUS_OK:
        total = plan.times[10]
        frac = out[O_CRASH_T] / total if total > 0 else 0.0
        psi[0:4] = SENTINEL * (2.0 - min(max(frac, 0.0), 1.0))
        psi[5:8] = psi[0]
        return psi

    psi[0] = (out[O_WQ] - lim.q_max) / lim.q_max
    psi[1] = (out[O_WQA] - lim.bending_max) / lim.bending_max
    psi[2] = (out[O_WHEAT] - lim.heat_flux_max) / lim.heat_flux_max
    psi[3] = max((out[O_WAX1] - lim.axial_stage1_g) / lim.axial_stage1_g,
                 (out[O_WAX2] - lim.axial_later_g) / lim.axial_later_g)

    rt = static.target_radius
    dr = static.radius_tol
    if out[O_ELEM_OK] == 1.0:
        psi[5] = (out[O_RA] - (rt + dr)) / rt
        psi[6] = ((rt - dr) - out[O_RP]) / rt
    else:
        # open or degenerate final orbit: graded energy surrogate keeps the
        # search pointed at bound orbits
        e_target = -0.5 / (rt / static.re)
        excess = max(0.0, (out[O_ENERGY] - e_target) / abs(e_target))
        psi[5] = 100.0 * (1.0 + excess)
        psi[6] = psi[5]
    psi[7] = abs(out[O_INCL] - static.target_incl) - static.incl_tol
    return psi


def evaluate(x: np.ndarray, cfg: MissionConfig, static: StaticTables | None = None,
             backend: str | None = None) -> EvalResult:
    """Objective and residual vector of one decision vector (fast path)."""
    x = np.asarray(x, dtype=float)
    if static is None:
        static = static_from_config(cfg)
    try:
        plan, law = plan_from_vector(cfg, x)
    except (ResolutionError, ValueError):
        return EvalResult(fitness=float(x[0]), psi=_failed_psi(), out=None, law=None)
    out, _bnd, _ = _backend.propagate_plan(static, plan, dense=False, backend=backend)
    psi = _assemble_psi(cfg, static, x, law, plan, out)
    return EvalResult(fitness=float(x[0]), psi=psi, out=out, law=law)


def propagate(x: np.ndarray, cfg: MissionConfig, static: StaticTables | None = None,
              backend: str | None = None, dense: bool = True) -> Trajectory:
    """Full propagation with dense samples and reporting detail.

    Raises the underlying resolution error for unresolvable motors (the CLI
    wants the diagnostic; the optimizer uses :func:`evaluate` instead).
    """
    x = np.asarray(x, dtype=float)
    if static is None:
        static = static_from_config(cfg)
    plan, law = plan_from_vector(cfg, x)
    out, bnd, samples = _backend.propagate_plan(static, plan, dense=dense,
                                                backend=backend)
    psi = _assemble_psi(cfg, static, x, law, plan, out)

    lim = cfg.limits
    rate = (90.0 - float(x[6])) / float(x[1])
    worst = {
        "dynamic_pressure": {"value": float(out[O_WQ]), "time_s": float(out[O_WQ_T]),
                             "limit": lim.q_max, "unit": "Pa"},
        "bending_load": {"value": float(out[O_WQA]), "time_s": float(out[O_WQA_T]),
                         "limit": lim.bending_max, "unit": "Pa*deg"},
        "heat_flux": {"value": float(out[O_WHEAT]), "time_s": float(out[O_WHEAT_T]),
                      "limit": lim.heat_flux_max, "unit": "W/m^2"},
        "axial_acceleration_stage1": {"value": float(out[O_WAX1]),
                                      "time_s": float(out[O_WAX1_T]),
                                      "limit": lim.axial_stage1_g, "unit": "g"},
        "axial_acceleration_later": {"value": float(out[O_WAX2]),
                                     "time_s": float(out[O_WAX2_T]),
                                     "limit": lim.axial_later_g, "unit": "g"},
        "pitch_rate": {"value": rate, "time_s": float(plan.times[1]),
                       "limit": lim.pitch_rate_max, "unit": "deg/s"},
    }
    terminal = {
        "periapsis_radius_m": float(out[O_RP]), "apoapsis_radius_m": float(out[O_RA]),
        "inclination_deg": float(out[O_INCL]), "eccentricity": float(out[O_ECC]),
        "semi_major_axis_m": float(out[O_SMA]),
        "elements_defined": bool(out[O_ELEM_OK] == 1.0),
        "periapsis_altitude_m": float(out[O_RP]) - static.re,
        "apoapsis_altitude_m": float(out[O_RA]) - static.re,
    }
    dv = {
        "propulsive_km_s": float(out[O_DV_PROP]) / 1e3,
        "gravity_loss_km_s": float(out[O_DV_GRAV]) / 1e3,
        "drag_loss_km_s": float(out[O_DV_AERO]) / 1e3,
        "steering_loss_km_s": float(out[O_DV_MIS]) / 1e3,
    }
    transfer = {
        "semi_major_axis_m": float(out[O_SMA_T8]), "eccentricity": float(out[O_ECC_T8]),
        "periapsis_radius_m": float(out[O_RP_T8]), "apoapsis_radius_m": float(out[O_RA_T8]),
        "elements_defined": bool(out[O_ELEM8_OK] == 1.0),
    }
    if transfer["elements_defined"] and out[O_SMA_T8] > 0:
        transfer["period_s"] = 2.0 * math.pi * math.sqrt(out[O_SMA_T8] ** 3 / static.mu)

    if samples is None:
        samples = np.zeros((0, len(SAMPLE_COLUMNS)))
    return Trajectory(
        samples=samples, boundaries=bnd, psi=psi, constraint_worst=worst,
        terminal=terminal, dv=dv, v_i=float(out[O_VI]) / 1e3,
        v_f=float(out[O_VF]) / 1e3, final_mass=float(out[O_MASS_F]),
        status=int(out[O_STATUS]), law=law, transfer_orbit=transfer,
        rhs_evaluations=int(out[O_NFEV]))


class AscentProblem:
    """Optimization-facing adapter: bounds plus batch evaluation.

    Pure and picklable; each worker process keeps its own kernel handle.
    """

    def __init__(self, cfg: MissionConfig, backend: str | None = None,
                 rtol: float = 1e-10, atol: float = 1e-12):
        self.cfg = cfg
        self.backend = backend
        self.static = static_from_config(cfg, rtol=rtol, atol=atol)
        lo, hi = cfg.decision_bounds()
        self.lower = lo
        self.upper = hi
        self.n_constraints = N_CONSTRAINTS

    @property
    def dimension(self) -> int:
        return len(DECISION_NAMES)

    def evaluate(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        res = evaluate(x, self.cfg, self.static, self.backend)
        return res.fitness, res.psi

    def evaluate_batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n = xs.shape[0]
        fit = np.empty(n)
        psi = np.empty((n, N_CONSTRAINTS))
        for i in range(n):
            fit[i], psi[i] = self.evaluate(xs[i])
        return fit, psi
