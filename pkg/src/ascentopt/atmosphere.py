"""U.S. Standard Atmosphere 1976 profile and Earth constants.

Evaluates ambient density, pressure, temperature and speed of sound as a
function of geometric altitude.  The seven-layer 1976 standard is applied up
to 86 km; above that, pressure and density decay exponentially with the
86-km scale height and are clamped to exactly zero above 120 km (the vehicle
only sees meaningful dynamic pressure far below that).

All functions are pure and operate on immutable module-level tables, so they
are safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AtmoSample",
    "EarthModel",
    "atmosphere_at",
    "mach_number",
    "R_AIR",
    "GAMMA_AIR",
    "G0",
]

G0 = 9.80665            # reference sea-level gravity, m/s^2
R_AIR = 287.053         # specific gas constant of air, J/(kg K)
GAMMA_AIR = 1.4
_R0_GEOPOT = 6356766.0  # radius used by the geometric->geopotential conversion, m

# layer bases in geopotential metres, lapse rates in K/m
_H_BASE = np.array([0.0, 11000.0, 20000.0, 32000.0, 47000.0, 51000.0, 71000.0])
_LAPSE = np.array([-0.0065, 0.0, 0.0010, 0.0028, 0.0, -0.0028, -0.0020])
_H_TOP = _R0_GEOPOT * 86000.0 / (_R0_GEOPOT + 86000.0)  # ~84852 m'

_T_SL = 288.15
_P_SL = 101325.0

TOP_ALTITUDE = 120e3  # geometric altitude of the hard vacuum clamp, m


def _build_base_tables() -> tuple[np.ndarray, np.ndarray]:
    """Temperature/pressure at every layer base, chained from sea level."""
    t_base = np.empty(7)
    p_base = np.empty(7)
    t_base[0] = _T_SL
    p_base[0] = _P_SL
    edges = np.append(_H_BASE, _H_TOP)
    for i in range(1, 7):
        dh = edges[i] - edges[i - 1]
        lapse = _LAPSE[i - 1]
        t_base[i] = t_base[i - 1] + lapse * dh
        if lapse == 0.0:
            p_base[i] = p_base[i - 1] * math.exp(-G0 * dh / (R_AIR * t_base[i - 1]))
        else:
            p_base[i] = p_base[i - 1] * (t_base[i - 1] / t_base[i]) ** (G0 / (R_AIR * lapse))
    return t_base, p_base


_T_BASE, _P_BASE = _build_base_tables()

# state at the 86-km joint, used by the exponential extension
_T_86 = _T_BASE[6] + _LAPSE[6] * (_H_TOP - _H_BASE[6])
_P_86 = _P_BASE[6] * (_T_BASE[6] / _T_86) ** (G0 / (R_AIR * _LAPSE[6]))
_RHO_86 = _P_86 / (R_AIR * _T_86)
_SCALE_86 = R_AIR * _T_86 / G0


@dataclass(frozen=True)
class AtmoSample:
    """Ambient state at one altitude."""

    rho: float   # density, kg/m^3
    p_a: float   # pressure, Pa
    T_a: float   # temperature, K
    a_s: float   # speed of sound, m/s


@dataclass(frozen=True)
class EarthModel:
    """Spherical rotating Earth used by the flight dynamics."""

    mu: float = 3.986004418e14      # gravitational parameter, m^3/s^2
    radius: float = 6378137.0       # spherical radius, m
    spin_rate: float = 7.2921150e-5  # rad/s
    g0: float = G0

    def __post_init__(self) -> None:
        if not (self.mu > 0 and self.radius > 0 and self.spin_rate >= 0):
            raise ValueError("Earth constants must be positive")
        if self.g0 != G0:
            raise ValueError("g0 is fixed at 9.80665 m/s^2")


def atmosphere_at(h: float) -> AtmoSample:
    """Ambient atmosphere at geometric altitude ``h`` in metres.

    Accepts altitudes down to -1000 m (clamped to sea level); above 120 km
    pressure and density are exactly zero.
    """
    if not math.isfinite(h):
        raise ValueError(f"altitude must be finite, got {h!r}")
    if h < -1000.0:
        raise ValueError(f"altitude below -1000 m: {h!r}")
    if h < 0.0:
        h = 0.0

    if h > TOP_ALTITUDE:
        t = _T_86
        return AtmoSample(0.0, 0.0, t, math.sqrt(GAMMA_AIR * R_AIR * t))

    if h > 86000.0:
        decay = math.exp(-(h - 86000.0) / _SCALE_86)
        t = _T_86
        return AtmoSample(_RHO_86 * decay, _P_86 * decay, t,
                          math.sqrt(GAMMA_AIR * R_AIR * t))

    hp = _R0_GEOPOT * h / (_R0_GEOPOT + h)
    i = 6
    while i > 0 and hp < _H_BASE[i]:
        i -= 1
    dh = hp - _H_BASE[i]
    lapse = _LAPSE[i]
    t = _T_BASE[i] + lapse * dh
    if lapse == 0.0:
        p = _P_BASE[i] * math.exp(-G0 * dh / (R_AIR * _T_BASE[i]))
    else:
        p = _P_BASE[i] * (_T_BASE[i] / t) ** (G0 / (R_AIR * lapse))
    return AtmoSample(p / (R_AIR * t), p, t, math.sqrt(GAMMA_AIR * R_AIR * t))


def mach_number(v_rel: float, h: float) -> float:
    """Mach number of relative speed ``v_rel`` (m/s) at altitude ``h`` (m)."""
    if v_rel < 0:
        raise ValueError("relative speed must be non-negative")
    if h > TOP_ALTITUDE:
        return 0.0
    return v_rel / atmosphere_at(h).a_s


def layer_tables() -> dict[str, np.ndarray | float]:
    """Numeric tables consumed by the propagation kernels.

    Both the compiled and the pure-python kernel read these exact values so
    their atmosphere evaluations agree bit-for-bit.
    """
    return {
        "h_base": _H_BASE.copy(),
        "t_base": _T_BASE.copy(),
        "p_base": _P_BASE.copy(),
        "lapse": _LAPSE.copy(),
        "r0_geopot": _R0_GEOPOT,
        "t_86": _T_86,
        "p_86": _P_86,
        "rho_86": _RHO_86,
        "scale_86": _SCALE_86,
        "r_air": R_AIR,
        "gamma_air": GAMMA_AIR,
        "g0": G0,
        "top_altitude": TOP_ALTITUDE,
    }
