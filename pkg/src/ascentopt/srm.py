"""First-stage solid-motor chamber-pressure law and performance model.

The first stage burns a redesigned grain whose chamber pressure follows a
six-leg dimensionless shape: parabola up to the peak, parabola down to a
shoulder, three straight legs, and a parabolic tail-off.  Eight shape
parameters (five pressure levels, three time fractions) plus the burn time
fully determine the profile; the absolute pressure scale is then fixed by
requiring that the motor burns exactly the configured propellant mass, with
the nozzle throat eroding at a constant radius rate.

Resolution yields closed-form leg masses (every leg is a polynomial of
degree <= 2, the erosion factor is quadratic, so each mass integral is a
degree-4 polynomial integrated exactly), the peak operating pressure, the
tail-off parabola pinned by its boundary level, its zero at burn-out and the
fixed tail-off mass, and the admissibility residuals that keep that parabola
convex with its first zero at burn-out.

Fixed upper-stage motors (constant vacuum thrust) are also described here.
All functions are pure; resolved laws are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .atmosphere import G0

__all__ = [
    "PropellantSpec",
    "NozzleSpec",
    "PressureShapeParams",
    "MotorBudget",
    "UpperStageSpec",
    "ResolvedPressureLaw",
    "ResolutionError",
    "SHAPE_FIELDS",
    "SHAPE_BOUNDS",
    "vandenkerckhove",
    "exit_pressure_ratio",
    "resolve_pressure_law",
    "separation_time",
    "leg_mass_fraction",
]

R_UNIVERSAL = 8.314462618  # J/(mol K)

VIOLATION_SENTINEL = 1.0e6

# search box for the eight shape parameters (levels relative to the peak,
# time fractions of the remaining interval)
SHAPE_FIELDS = (
    "p_ignition", "f_peak", "p_shoulder", "f_ramp",
    "p_ramp_end", "f_cruise", "p_cruise_end", "p_tailoff",
)
SHAPE_BOUNDS = {
    "p_ignition": (0.85, 0.95),
    "f_peak": (0.05, 0.15),
    "p_shoulder": (0.80, 0.95),
    "f_ramp": (0.10, 0.30),
    "p_ramp_end": (0.60, 0.75),
    "f_cruise": (0.40, 0.85),
    "p_cruise_end": (0.60, 0.75),
    "p_tailoff": (0.60, 0.75),
}


class ResolutionError(ValueError):
    """Pressure-law resolution produced a non-finite or mis-ordered profile.

    Carries the violation sentinel the optimizer uses as a death penalty."""

    sentinel = VIOLATION_SENTINEL


@dataclass(frozen=True)
class PropellantSpec:
    """Combustion-gas properties and motor quality factors."""

    gamma: float              # specific-heat ratio of combustion products
    molar_mass: float         # kg/mol
    chamber_temp: float       # K
    cstar_efficiency: float   # characteristic-velocity quality factor
    thrust_efficiency: float  # thrust-coefficient quality factor
    gas_constant: float = R_UNIVERSAL

    def __post_init__(self) -> None:
        if not self.gamma > 1.0:
            raise ValueError("gamma must exceed 1")
        for name in ("molar_mass", "chamber_temp", "cstar_efficiency",
                     "thrust_efficiency", "gas_constant"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def c_star(self) -> float:
        """Characteristic velocity, m/s."""
        gg = vandenkerckhove(self.gamma)
        return self.cstar_efficiency * math.sqrt(
            self.gas_constant / self.molar_mass * self.chamber_temp) / gg


@dataclass(frozen=True)
class NozzleSpec:
    """Throat/exit geometry with linear throat-radius erosion."""

    throat_radius: float  # initial throat radius, m
    erosion: float        # total throat-radius erosion over the burn, m
    exit_area: float      # m^2

    def __post_init__(self) -> None:
        if not (self.throat_radius > 0 and self.exit_area > 0):
            raise ValueError("nozzle dimensions must be positive")
        if self.erosion < 0:
            raise ValueError("erosion must be non-negative")
        if self.exit_area <= math.pi * (self.throat_radius + self.erosion) ** 2:
            raise ValueError("nozzle must stay supersonic: exit area must exceed "
                             "the fully eroded throat area")

    @property
    def throat_area(self) -> float:
        """Initial throat area, m^2."""
        return math.pi * self.throat_radius ** 2

    @property
    def erosion_ratio(self) -> float:
        """Total erosion relative to the initial throat radius."""
        return self.erosion / self.throat_radius


@dataclass(frozen=True)
class PressureShapeParams:
    """Dimensionless shape of the chamber-pressure profile.

    Levels are fractions of the peak pressure; ``f_*`` fractions place the
    interior breakpoints inside the remaining interval before tail-off, which
    keeps the breakpoints ordered for any parameter draw.
    """

    p_ignition: float
    f_peak: float
    p_shoulder: float
    f_ramp: float
    p_ramp_end: float
    f_cruise: float
    p_cruise_end: float
    p_tailoff: float

    def __post_init__(self) -> None:
        for name in SHAPE_FIELDS:
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 < v < 1.0):
                raise ValueError(f"{name} must lie strictly inside (0, 1), got {v!r}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in SHAPE_FIELDS])

    @classmethod
    def from_array(cls, x) -> "PressureShapeParams":
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class MotorBudget:
    """Fixed mass/pressure bookkeeping of the first-stage motor."""

    propellant_mass: float        # total loaded propellant, kg
    tailoff_mass: float           # propellant burnt during tail-off, kg
    tailoff_start_frac: float     # tail-off start as fraction of burn time
    max_operating_pressure: float  # structural pressure ceiling, Pa
    separation_pressure: float    # stage released at this chamber pressure, Pa

    def __post_init__(self) -> None:
        if not 0.0 < self.tailoff_mass < self.propellant_mass:
            raise ValueError("tail-off mass must lie in (0, propellant mass)")
        if not 0.0 < self.tailoff_start_frac < 1.0:
            raise ValueError("tail-off start fraction must lie in (0, 1)")
        if not 0.0 <= self.separation_pressure < self.max_operating_pressure:
            raise ValueError("separation pressure must be below the operating ceiling")


@dataclass(frozen=True)
class UpperStageSpec:
    """Fixed upper-stage motor: constant vacuum thrust until depletion."""

    thrust_vac: float       # N
    isp_vac: float          # s
    propellant_mass: float  # kg
    dry_mass: float         # kg

    def __post_init__(self) -> None:
        for name in ("thrust_vac", "isp_vac", "propellant_mass", "dry_mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def burn_time(self) -> float:
        """Seconds to propellant depletion at constant thrust."""
        return self.propellant_mass * self.isp_vac * G0 / self.thrust_vac

    @property
    def mass_flow(self) -> float:
        return self.thrust_vac / (self.isp_vac * G0)


def vandenkerckhove(gamma: float) -> float:
    """Vandenkerckhove function of the specific-heat ratio."""
    return math.sqrt(gamma) * (2.0 / (gamma + 1.0)) ** ((gamma + 1.0) / (2.0 * (gamma - 1.0)))


def exit_pressure_ratio(gamma: float, area_ratio: float, hint: float | None = None) -> float:
    """Supersonic exit-to-chamber pressure ratio for a given area ratio.

    Solves the isentropic area-ratio relation on the supersonic branch with a
    bracketed Newton iteration (bisection fallback), relative tolerance 1e-12.
    """
    if not area_ratio > 1.0:
        raise ValueError("area ratio must exceed 1")
    gg = vandenkerckhove(gamma)
    ex_a = 2.0 / gamma
    ex_b = (gamma - 1.0) / gamma
    two_g = 2.0 * gamma / (gamma - 1.0)
    crit = (2.0 / (gamma + 1.0)) ** (gamma / (gamma - 1.0))

    lo, hi = 0.0, crit
    x = hint if hint is not None and lo < hint < hi else 0.25 * crit
    for _ in range(200):
        xa = x ** ex_a
        xb = x ** ex_b
        g = two_g * xa * (1.0 - xb)
        f = gg - area_ratio * math.sqrt(g)
        if f > 0.0:
            lo = x
        else:
            hi = x
        dg = two_g * (ex_a * xa / x * (1.0 - xb) - ex_b * xa * xb / x)
        df = -area_ratio * dg / (2.0 * math.sqrt(g))
        step = f / df
        xn = x - step
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-12 * xn:
            return xn
        x = xn
    raise ArithmeticError("exit-pressure ratio iteration failed to converge")


def leg_mass_fraction(coeffs, erosion_ratio: float, lo: float, hi: float) -> float:
    """Exact integral of (pressure polynomial) x (eroded-throat factor).

    ``coeffs`` are the global-time polynomial coefficients (c0, c1, c2) of the
    dimensionless pressure on one leg; the throat-growth factor
    (1 + r*eta)^2 multiplies in, giving a quartic integrated in closed form.
    """
    c0, c1, c2 = coeffs
    r = erosion_ratio
    d = (
        c0,
        c1 + 2.0 * r * c0,
        c2 + 2.0 * r * c1 + r * r * c0,
        2.0 * r * c2 + r * r * c1,
        r * r * c2,
    )
    total = 0.0
    pl = lo
    ph = hi
    for k in range(5):
        total += d[k] * (ph - pl) / (k + 1)
        pl *= lo
        ph *= hi
    return total


def _poly_eval(coeffs, x: float) -> float:
    c0, c1, c2 = coeffs
    return c0 + x * (c1 + x * c2)


@dataclass(frozen=True)
class ResolvedPressureLaw:
    """Fully determined chamber-pressure profile plus motor constants.

    ``knots`` are the seven dimensionless breakpoint times (0 first, 1 last);
    ``levels`` the dimensionless pressure at each knot (1.0 at the peak, 0 at
    burn-out); ``leg_coeffs`` the per-leg quadratic coefficients in global
    dimensionless time.  Everything needed to evaluate vacuum thrust and mass
    flow at any instant is carried along, so the propagation kernels need no
    other motor state.
    """

    knots: np.ndarray          # (7,)
    levels: np.ndarray         # (7,)
    leg_coeffs: np.ndarray     # (6, 3)
    leg_mass_fracs: np.ndarray  # (6,) dimensionless leg masses
    p_ref: float               # peak operating pressure, Pa (scales the profile)
    burn_time: float           # s
    tail_coeffs: tuple[float, float, float]  # tail-off parabola a*eta^2 + b*eta + c
    eta_sep: float             # dimensionless time of the separation-pressure crossing
    residual_mass: float       # propellant still aboard at separation, kg
    meop_residual: float       # p_ref - pressure ceiling, Pa (<= 0 admissible)
    convexity_residual: float  # > 0 when the tail-off parabola is concave
    tail_zero_residual: float  # > 0 when the parabola's first zero precedes burn-out
    slope_gap: float           # left/right derivative mismatch at the shoulder knot
    # motor constants used during flight evaluation
    c_star: float
    throat_area_0: float
    erosion_ratio: float
    exit_area: float
    gamma: float
    thrust_efficiency: float
    max_operating_pressure: float
    separation_pressure: float
    loaded_mass: float         # configured total propellant, kg
    tailoff_mass: float

    def pressure_at(self, eta: float) -> float:
        """Dimensionless pressure at dimensionless time ``eta`` in [0, 1]."""
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"dimensionless time outside [0, 1]: {eta!r}")
        leg = 0
        while leg < 5 and eta > self.knots[leg + 1]:
            leg += 1
        return _poly_eval(self.leg_coeffs[leg], eta)

    def throat_area_at(self, eta: float) -> float:
        """Throat area at ``eta``; erosion freezes when tail-off starts."""
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"dimensionless time outside [0, 1]: {eta!r}")
        e = min(eta, self.knots[5])
        g = 1.0 + self.erosion_ratio * e
        return self.throat_area_0 * g * g

    def state_at(self, t: float, ratio_hint: float | None = None
                 ) -> tuple[float, float, float]:
        """(vacuum thrust N, mass flow kg/s, vacuum specific impulse s) at ``t``."""
        if not 0.0 <= t <= self.burn_time:
            raise ValueError(f"time outside the burn: {t!r}")
        eta = t / self.burn_time
        level = self.pressure_at(eta)
        if level <= 0.0:
            return 0.0, 0.0, 0.0
        p_c = self.p_ref * level
        a_t = self.throat_area_at(eta)
        ratio = exit_pressure_ratio(self.gamma, self.exit_area / a_t, ratio_hint)
        cf_vac = (self.thrust_efficiency * vandenkerckhove(self.gamma)
                  * math.sqrt(2.0 * self.gamma / (self.gamma - 1.0)
                              * (1.0 - ratio ** ((self.gamma - 1.0) / self.gamma)))
                  + ratio * self.exit_area / a_t)
        thrust = p_c * a_t * cf_vac
        mdot = p_c * a_t / self.c_star
        return thrust, mdot, cf_vac * self.c_star / G0

    @property
    def admissible(self) -> bool:
        return (self.meop_residual <= 0.0 and self.convexity_residual <= 0.0
                and self.tail_zero_residual <= 0.0)

    def mass_closure(self) -> float:
        """Total propellant implied by the profile, kg (equals ``loaded_mass``)."""
        burnt = (self.burn_time * self.p_ref * self.throat_area_0 / self.c_star
                 * float(np.sum(self.leg_mass_fracs[:5])))
        return burnt + self.tailoff_mass


def resolve_pressure_law(params: PressureShapeParams, budget: MotorBudget,
                         prop: PropellantSpec, nozzle: NozzleSpec,
                         burn_time: float) -> ResolvedPressureLaw:
    """Turn shape parameters into an absolute, flight-ready pressure law.

    Raises :class:`ResolutionError` when the profile degenerates (mis-ordered
    breakpoints or non-finite intermediates); the optimizer maps that onto a
    maximal constraint violation instead of aborting.
    """
    if not (math.isfinite(burn_time) and burn_time > 0):
        raise ResolutionError(f"burn time must be positive and finite: {burn_time!r}")

    p0 = params.p_ignition
    p2 = params.p_shoulder
    p3 = params.p_ramp_end
    p4 = params.p_cruise_end
    p5 = params.p_tailoff

    e1 = params.f_peak
    e5 = budget.tailoff_start_frac
    den = 2.0 * (p2 - 1.0) * params.f_ramp + (p3 - p2)
    if den == 0.0:
        raise ResolutionError("shoulder breakpoint is indeterminate")
    e2 = (2.0 * (p2 - 1.0) * params.f_ramp + (p3 - p2) * e1) / den
    e3 = e2 + (e5 - e2) * params.f_ramp
    e4 = e3 + (e5 - e3) * params.f_cruise

    knots = np.array([0.0, e1, e2, e3, e4, e5, 1.0])
    if not (np.all(np.isfinite(knots)) and 0.0 < e1 <= e2 <= e3 <= e4 <= e5 < 1.0):
        raise ResolutionError(f"breakpoints out of order: {knots}")
    levels = np.array([p0, 1.0, p2, p3, p4, p5, 0.0])

    leg_coeffs = np.empty((6, 3))
    k1 = (p0 - 1.0) / (e1 * e1)
    leg_coeffs[0] = (k1 * e1 * e1 + 1.0, -2.0 * k1 * e1, k1)
    if e2 > e1:
        k2 = (p2 - 1.0) / ((e2 - e1) * (e2 - e1))
        leg_coeffs[1] = (k2 * e1 * e1 + 1.0, -2.0 * k2 * e1, k2)
    else:
        leg_coeffs[1] = (p2, 0.0, 0.0)
    for leg in (2, 3, 4):
        lo, hi = knots[leg], knots[leg + 1]
        if hi > lo:
            slope = (levels[leg + 1] - levels[leg]) / (hi - lo)
            leg_coeffs[leg] = (levels[leg] - slope * lo, slope, 0.0)
        else:
            leg_coeffs[leg] = (levels[leg], 0.0, 0.0)

    # left/right derivative mismatch at the shoulder (the closed form for the
    # shoulder knot trades exact slope continuity for simplicity; report it)
    if e2 > e1 and e3 > e2:
        left = 2.0 * (p2 - 1.0) / (e2 - e1)
        right = (p3 - p2) / (e3 - e2)
        slope_gap = abs(left - right)
    else:
        slope_gap = math.inf

    rbar = nozzle.erosion_ratio
    fracs = np.empty(6)
    for leg in range(5):
        fracs[leg] = leg_mass_fraction(leg_coeffs[leg], rbar, knots[leg], knots[leg + 1])
    head = float(np.sum(fracs[:5]))
    if not (math.isfinite(head) and head > 0):
        raise ResolutionError(f"degenerate leg masses: {fracs[:5]}")

    a_t0 = nozzle.throat_area
    c_star = prop.c_star
    p_ref = (c_star / (burn_time * a_t0)
             * (budget.propellant_mass - budget.tailoff_mass) / head)

    grow = 1.0 + rbar * e5
    frac_tail = budget.tailoff_mass * c_star / (p_ref * burn_time * a_t0 * grow * grow)
    fracs[5] = frac_tail

    span = 1.0 - e5
    tail_a = 3.0 / (span * span) * (p5 - 2.0 * frac_tail / span)
    tail_b = -p5 / span - tail_a * (1.0 + e5)
    tail_c = -tail_a - tail_b
    leg_coeffs[5] = (tail_c, tail_b, tail_a)

    if not np.all(np.isfinite(leg_coeffs)):
        raise ResolutionError("non-finite pressure-law coefficients")

    convexity = 2.0 * frac_tail / span - p5
    tail_zero = p5 - 3.0 * frac_tail / span

    # stage-release instant: first crossing of the separation pressure on the
    # tail-off leg (single crossing: the parabola runs from p5 down to 0)
    thr = budget.separation_pressure / p_ref
    if thr >= p5:
        raise ResolutionError(
            f"separation pressure {budget.separation_pressure:.6g} Pa is not below "
            f"the tail-off entry pressure {p5 * p_ref:.6g} Pa")
    if thr <= 0.0:
        eta_sep = 1.0
    else:
        tail = leg_coeffs[5]
        eta_sep = float(brentq(lambda x: _poly_eval(tail, x) - thr, e5, 1.0,
                               xtol=1e-14, rtol=8.9e-16))
    unburnt = leg_mass_fraction(leg_coeffs[5], 0.0, eta_sep, 1.0)
    residual = budget.tailoff_mass * unburnt / frac_tail

    return ResolvedPressureLaw(
        knots=knots, levels=levels, leg_coeffs=leg_coeffs, leg_mass_fracs=fracs,
        p_ref=p_ref, burn_time=burn_time,
        tail_coeffs=(tail_a, tail_b, tail_c),
        eta_sep=eta_sep, residual_mass=residual,
        meop_residual=p_ref - budget.max_operating_pressure,
        convexity_residual=convexity, tail_zero_residual=tail_zero,
        slope_gap=slope_gap,
        c_star=c_star, throat_area_0=a_t0, erosion_ratio=rbar,
        exit_area=nozzle.exit_area, gamma=prop.gamma,
        thrust_efficiency=prop.thrust_efficiency,
        max_operating_pressure=budget.max_operating_pressure,
        separation_pressure=budget.separation_pressure,
        loaded_mass=budget.propellant_mass, tailoff_mass=budget.tailoff_mass,
    )


def separation_time(law: ResolvedPressureLaw, threshold: float | None = None) -> float:
    """Dimensionless time at which chamber pressure decays to ``threshold``.

    Defaults to the law's configured separation pressure.  The crossing is
    searched on the tail-off leg only, where the profile is monotone through
    the threshold by admissibility.
    """
    thr_pa = law.separation_pressure if threshold is None else threshold
    thr = thr_pa / law.p_ref
    e5 = float(law.knots[5])
    p5 = float(law.levels[5])
    if thr >= p5:
        raise ValueError("threshold must be below the tail-off entry pressure")
    if thr <= 0.0:
        return 1.0
    tail = law.leg_coeffs[5]
    return float(brentq(lambda x: _poly_eval(tail, x) - thr, e5, 1.0,
                        xtol=1e-14, rtol=8.9e-16))
