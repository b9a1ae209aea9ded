"""Commanded thrust direction for the ten trajectory arcs.

Steering angles are expressed either in the local topocentric frame (early
flight: vertical rise, pitch-over, recovery) or in the radial/transverse/
normal orbital frame (upper-stage flight and injection).  Flight-path angle
is measured from the local horizontal plane, azimuth clockwise from north in
the topocentric frame and from the transverse axis toward the orbit normal
in the RTN frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GuidanceProgram",
    "LaunchSite",
    "FrameError",
    "reference_azimuth",
    "topocentric_axes",
    "rtn_axes",
    "direction_from_angles",
    "angles_from_direction",
    "pitch_profile_angle",
    "blt_tangent",
    "thrust_direction",
    "incidence_angle",
    "ARC_NAMES",
]

ARC_NAMES = (
    "liftoff", "pitchover", "recovery", "stage1_turn", "coast12",
    "stage2_turn", "coast23", "stage3_burn", "coast34", "injection",
)

# arcs flown with thrust slaved to the atmosphere-relative velocity
_TURN_ARCS = (4, 6)
_COAST_ARCS = (5, 7, 9)


class FrameError(ValueError):
    """Degenerate geometry: a steering frame cannot be constructed."""


@dataclass(frozen=True)
class GuidanceProgram:
    """Steering decision variables for one trajectory."""

    pitch_duration: float      # s, pitch-over length
    recovery_duration: float   # s
    kick_angle: float          # deg, flight-path angle commanded at pitch-over end
    launch_azimuth: float      # deg, constant topocentric azimuth of early flight
    stage3_fpa_start: float    # deg, curved-tangent law start value
    stage3_fpa_end: float      # deg, curved-tangent law end value
    stage3_curvature: float    # exponent in [-1, 0]; 0 gives the linear tangent law
    stage3_azimuth: float      # deg, constant RTN azimuth of the third-stage burn
    injection_fpa: float       # deg, constant RTN flight-path angle of the final burn
    injection_azimuth: float   # deg
    curvature_base: float = 100.0


@dataclass(frozen=True)
class LaunchSite:
    latitude: float   # deg
    longitude: float  # deg

    def __post_init__(self) -> None:
        if not abs(self.latitude) < 90.0:
            raise ValueError("launch latitude must be strictly between -90 and 90 deg")


def reference_azimuth(inclination: float, latitude: float) -> float:
    """Ideal non-rotating-Earth launch azimuth for a target inclination, deg.

    The optimizer searches the actual azimuth in a window centred here.
    """
    num = math.cos(math.radians(inclination))
    den = math.cos(math.radians(latitude))
    ratio = num / den
    if abs(ratio) > 1.0:
        raise ValueError(
            f"inclination {inclination} deg unreachable from latitude {latitude} deg")
    return 180.0 - math.degrees(math.asin(ratio))


def topocentric_axes(r: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Local (up, north, east) unit triad at inertial position ``r``."""
    rn = float(np.linalg.norm(r))
    if rn == 0.0:
        raise FrameError("topocentric frame undefined at the origin")
    up = r / rn
    east = np.array([-up[1], up[0], 0.0])
    en = float(np.linalg.norm(east))
    if en < 1e-12:
        raise FrameError("topocentric frame degenerate at the pole")
    east = east / en
    north = np.cross(up, east)
    return up, north, east


def rtn_axes(r: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(radial, transverse, normal) unit triad of the osculating orbit."""
    rn = float(np.linalg.norm(r))
    if rn == 0.0:
        raise FrameError("RTN frame undefined at the origin")
    radial = r / rn
    h = np.cross(r, v)
    hn = float(np.linalg.norm(h))
    if hn < 1e-12 * rn * max(float(np.linalg.norm(v)), 1e-30):
        raise FrameError("RTN frame degenerate for radial motion")
    normal = h / hn
    transverse = np.cross(normal, radial)
    return radial, transverse, normal


def direction_from_angles(fpa: float, azimuth: float, vertical: np.ndarray,
                          ref: np.ndarray, side: np.ndarray) -> np.ndarray:
    """Unit vector from flight-path angle / azimuth (deg) in a local triad.

    ``vertical`` is the elevation axis, ``ref`` the zero-azimuth axis and
    ``side`` the 90-deg azimuth axis.
    """
    th = math.radians(fpa)
    ps = math.radians(azimuth)
    ct = math.cos(th)
    return math.sin(th) * vertical + ct * math.cos(ps) * ref + ct * math.sin(ps) * side


def angles_from_direction(d: np.ndarray, vertical: np.ndarray, ref: np.ndarray,
                          side: np.ndarray) -> tuple[float, float]:
    """Inverse of :func:`direction_from_angles`, angles in degrees."""
    s = min(1.0, max(-1.0, float(np.dot(d, vertical))))
    fpa = math.degrees(math.asin(s))
    az = math.degrees(math.atan2(float(np.dot(d, side)), float(np.dot(d, ref))))
    return fpa, az


def pitch_profile_angle(t: float, t1: float, t2: float, kick_angle: float) -> float:
    """Linear pitch-over flight-path angle (deg) between ``t1`` and ``t2``."""
    return 90.0 + (t - t1) / (t2 - t1) * (kick_angle - 90.0)


def blt_tangent(tau: float, tan_start: float, tan_end: float, base_pow: float) -> float:
    """Curved bilinear-tangent interpolation of tan(flight-path angle).

    ``tau`` is the normalized time in [0, 1]; ``base_pow`` is the curvature
    base raised to the curvature exponent.  ``base_pow == 1`` degenerates to
    the linear tangent law.
    """
    num = base_pow * tan_start + (tan_end - base_pow * tan_start) * tau
    den = base_pow + (1.0 - base_pow) * tau
    return num / den


def incidence_angle(thrust_dir: np.ndarray, v_rel: np.ndarray) -> float:
    """Angle between thrust and relative velocity, deg (0 when either vanishes)."""
    tn = float(np.linalg.norm(thrust_dir))
    vn = float(np.linalg.norm(v_rel))
    if tn == 0.0 or vn == 0.0:
        return 0.0
    c = float(np.dot(thrust_dir, v_rel)) / (tn * vn)
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def thrust_direction(arc: int, t: float, r: np.ndarray, v_rel: np.ndarray,
                     v: np.ndarray, prog: GuidanceProgram,
                     arc_times: np.ndarray) -> np.ndarray | None:
    """Commanded inertial unit thrust direction on arc ``arc`` (1-based).

    ``arc_times`` holds the eleven arc boundary epochs t0..t10.  Coast arcs
    return None.  Raises :class:`FrameError` on a zero relative velocity in a
    velocity-slaved arc.
    """
    if not 1 <= arc <= 10:
        raise ValueError(f"arc id must be in 1..10, got {arc}")
    if arc in _COAST_ARCS:
        return None

    if arc == 1:
        rn = float(np.linalg.norm(r))
        return r / rn
    if arc in (2, 3):
        up, north, east = topocentric_axes(r)
        if arc == 2:
            fpa = pitch_profile_angle(t, arc_times[1], arc_times[2], prog.kick_angle)
        else:
            fpa = prog.kick_angle
        return direction_from_angles(fpa, prog.launch_azimuth, up, north, east)
    if arc in _TURN_ARCS:
        vn = float(np.linalg.norm(v_rel))
        if vn == 0.0:
            raise FrameError("velocity-slaved steering undefined at zero relative speed")
        return v_rel / vn
    radial, transverse, normal = rtn_axes(r, v)
    if arc == 8:
        tau = (t - arc_times[7]) / (arc_times[8] - arc_times[7])
        base_pow = prog.curvature_base ** prog.stage3_curvature
        tan_fpa = blt_tangent(tau, math.tan(math.radians(prog.stage3_fpa_start)),
                              math.tan(math.radians(prog.stage3_fpa_end)), base_pow)
        fpa = math.degrees(math.atan(tan_fpa))
        return direction_from_angles(fpa, prog.stage3_azimuth,
                                     radial, transverse, normal)
    return direction_from_angles(prog.injection_fpa, prog.injection_azimuth,
                                 radial, transverse, normal)
