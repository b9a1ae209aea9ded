"""Shared numeric interface of the two propagation kernels.

The compiled and the pure-python kernel consume exactly the same flattened
inputs and fill exactly the same output slots, so cross-backend equivalence
can be asserted number-by-number.  ``StaticTables`` captures everything that
is fixed for a mission; ``FlightPlan`` is the small per-decision-vector part
(arc epochs, masses, steering scalars and the resolved pressure law).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import atmosphere
from .config import MissionConfig
from .srm import ResolvedPressureLaw, resolve_pressure_law

# ---------------------------------------------------------------------------
# output layout (flat float64 array)

OUT_SIZE = 33
(O_STATUS, O_CRASH_T, O_VI, O_VF,
 O_DV_PROP, O_DV_GRAV, O_DV_AERO, O_DV_MIS,
 O_RP, O_RA, O_INCL, O_ECC, O_SMA, O_ELEM_OK,
 O_WQ, O_WQ_T, O_WQA, O_WQA_T, O_WHEAT, O_WHEAT_T,
 O_WAX1, O_WAX1_T, O_WAX2, O_WAX2_T,
 O_MASS_F, O_SMA_T8, O_ECC_T8, O_ELEM8_OK, O_RP_T8, O_RA_T8,
 O_T_END, O_ENERGY, O_NFEV) = range(OUT_SIZE)

STATUS_OK = 0.0
STATUS_CRASHED = 1.0
STATUS_NONFINITE = 2.0
STATUS_STALLED = 3.0

# sample columns (dense export mode)
SAMPLE_COLUMNS = ("t_s", "phase", "alt_m", "lat_deg", "lon_deg", "v_m_s",
                  "v_rel_m_s", "mass_kg", "q_pa", "alpha_deg",
                  "q_alpha_pa_deg", "ax_g", "heat_w_m2",
                  "fpa_topo_deg", "azimuth_topo_deg")

# arc thrust modes
MODE_SRM = 0
MODE_STAGE2 = 1
MODE_STAGE3 = 2
MODE_AOCS = 3
MODE_COAST = 4
ARC_MODES = (MODE_SRM, MODE_SRM, MODE_SRM, MODE_SRM, MODE_COAST,
             MODE_STAGE2, MODE_COAST, MODE_STAGE3, MODE_COAST, MODE_AOCS)

# altitude (m) below which a vacuum-coast integrator step still gets dense
# constraint sampling: heat flux only matters where the atmosphere table is
# non-zero, with margin
SAMPLE_ALTITUDE = 150e3


@dataclass(frozen=True)
class StaticTables:
    """Mission-fixed numbers, flattened for the kernels (picklable)."""

    # earth / units
    mu: float
    re: float
    omega: float
    g0: float
    v_unit: float
    t_unit: float
    acc_unit: float
    # atmosphere layer data (python-float tuples: the fallback kernel must
    # route pow through libm, as the compiled kernel does, not numpy's pow)
    atm_h_base: tuple
    atm_t_base: tuple
    atm_p_base: tuple
    atm_lapse: tuple
    atm_r0: float
    atm_t86: float
    atm_p86: float
    atm_rho86: float
    atm_scale86: float
    atm_r_air: float
    atm_gamma: float
    atm_top: float
    # drag
    drag_mach: np.ndarray
    drag_cd: np.ndarray
    s_ref: float
    # fixed vehicle numbers
    fairing_mass: float
    stage1_dry: float
    stage2_thrust: float
    stage2_mdot: float
    stage2_burn: float
    stage2_dry: float
    stage3_thrust: float
    stage3_mdot: float
    stage3_burn: float
    aocs_thrust: float
    aocs_mdot: float
    aocs_burn: float
    liftoff_duration: float
    interstage_coast: float
    # launch site
    lat_rad: float
    lon_rad: float
    # structural limits (dimensional)
    q_max: float
    bending_max: float
    heat_max: float
    ax1_max: float
    ax2_max: float
    # target orbit
    target_radius: float
    target_incl: float
    radius_tol: float
    incl_tol: float
    # integrator
    rtol: float
    atol: float
    sample_dt: float


def static_from_config(cfg: MissionConfig, rtol: float = 1e-10,
                       atol: float = 1e-12, sample_dt: float = 0.1) -> StaticTables:
    earth = cfg.earth
    v_unit = math.sqrt(earth.mu / earth.radius)
    atm = atmosphere.layer_tables()
    return StaticTables(
        mu=earth.mu, re=earth.radius, omega=earth.spin_rate, g0=earth.g0,
        v_unit=v_unit, t_unit=earth.radius / v_unit,
        acc_unit=earth.mu / earth.radius ** 2,
        atm_h_base=tuple(float(v) for v in atm["h_base"]),
        atm_t_base=tuple(float(v) for v in atm["t_base"]),
        atm_p_base=tuple(float(v) for v in atm["p_base"]),
        atm_lapse=tuple(float(v) for v in atm["lapse"]),
        atm_r0=atm["r0_geopot"], atm_t86=atm["t_86"], atm_p86=atm["p_86"],
        atm_rho86=atm["rho_86"], atm_scale86=atm["scale_86"],
        atm_r_air=atm["r_air"], atm_gamma=atm["gamma_air"], atm_top=atm["top_altitude"],
        drag_mach=cfg.vehicle.drag.mach, drag_cd=cfg.vehicle.drag.cd,
        s_ref=cfg.vehicle.s_ref,
        fairing_mass=cfg.vehicle.fairing_mass,
        stage1_dry=cfg.stage1.dry_mass,
        stage2_thrust=cfg.stage2.thrust_vac, stage2_mdot=cfg.stage2.mass_flow,
        stage2_burn=cfg.stage2.burn_time, stage2_dry=cfg.stage2.dry_mass,
        stage3_thrust=cfg.stage3.thrust_vac, stage3_mdot=cfg.stage3.mass_flow,
        stage3_burn=cfg.stage3.burn_time,
        aocs_thrust=cfg.aocs.thrust_vac, aocs_mdot=cfg.aocs.mass_flow,
        aocs_burn=cfg.aocs.burn_time,
        liftoff_duration=cfg.liftoff_duration,
        interstage_coast=cfg.vehicle.interstage_coast,
        lat_rad=math.radians(cfg.site.latitude),
        lon_rad=math.radians(cfg.site.longitude),
        q_max=cfg.limits.q_max, bending_max=cfg.limits.bending_max,
        heat_max=cfg.limits.heat_flux_max,
        ax1_max=cfg.limits.axial_stage1_g, ax2_max=cfg.limits.axial_later_g,
        target_radius=cfg.target_radius, target_incl=cfg.target.inclination,
        radius_tol=cfg.target.radius_tol, incl_tol=cfg.target.inclination_tol,
        rtol=rtol, atol=atol, sample_dt=sample_dt)


@dataclass(frozen=True)
class FlightPlan:
    """Per-decision-vector inputs of one propagation.

    ``start_state`` (nondimensional 11-state) overrides the pad start; tests
    use it to propagate coast arcs from arbitrary orbits."""

    times: np.ndarray        # (11,) arc boundary epochs t0..t10, s
    m0: float                # lift-off mass, kg
    drop_stage1: float       # mass released at t4, kg (dry + unburnt residual)
    drop_stage2: float       # mass released at t6, kg (dry + fairing)
    kick_angle: float        # deg
    launch_azimuth: float    # deg
    tan_fpa7: float
    tan_fpa8: float
    base_pow: float          # curvature base ** curvature exponent
    stage3_azimuth: float    # deg
    injection_fpa: float     # deg
    injection_azimuth: float  # deg
    # resolved motor data
    law_knots: np.ndarray    # (7,)
    law_coeffs: np.ndarray   # (6, 3)
    p_ref: float
    burn_time: float
    throat_area_0: float
    erosion_ratio: float
    exit_area: float
    gamma: float
    thrust_eff: float
    c_star: float
    start_state: np.ndarray | None = None


def coast_plan(duration_s: float, start_state: np.ndarray, m0: float = 1000.0) -> FlightPlan:
    """All-coast plan (every powered arc zero length) from a given state."""
    times = np.zeros(11)
    times[9] = duration_s
    times[10] = duration_s
    return FlightPlan(
        times=times, m0=m0, drop_stage1=0.0, drop_stage2=0.0,
        kick_angle=80.0, launch_azimuth=180.0, tan_fpa7=0.0, tan_fpa8=0.0,
        base_pow=1.0, stage3_azimuth=0.0, injection_fpa=0.0,
        injection_azimuth=0.0,
        law_knots=np.array([0.0, 0.1, 0.2, 0.3, 0.4, 0.85, 1.0]),
        law_coeffs=np.zeros((6, 3)), p_ref=1.0, burn_time=100.0,
        throat_area_0=0.1, erosion_ratio=0.0, exit_area=1.0, gamma=1.2,
        thrust_eff=1.0, c_star=1500.0,
        start_state=np.asarray(start_state, dtype=float))


def plan_from_vector(cfg: MissionConfig, x: np.ndarray
                     ) -> tuple[FlightPlan, ResolvedPressureLaw]:
    """Expand a decision vector into a flight plan (resolving the motor).

    Raises :class:`~ascentopt.srm.ResolutionError` for degenerate motors and
    ValueError for schedules whose early arcs outlast the stage-1 burn.
    """
    x = np.asarray(x, dtype=float)
    law = resolve_pressure_law(cfg.shape_params(x), cfg.stage1.budget,
                               cfg.stage1.propellant, cfg.stage1.nozzle,
                               float(x[3]))
    times = np.empty(11)
    times[0] = 0.0
    times[1] = cfg.liftoff_duration
    times[2] = times[1] + x[1]
    times[3] = times[2] + x[2]
    times[4] = law.eta_sep * law.burn_time
    if times[4] <= times[3]:
        raise ValueError("stage-1 burn ends before the recovery arc does")
    times[5] = times[4] + cfg.vehicle.interstage_coast
    times[6] = times[5] + cfg.stage2.burn_time
    times[7] = times[6] + x[4]
    times[8] = times[7] + cfg.stage3.burn_time
    times[9] = times[8] + x[5]
    times[10] = times[9] + cfg.aocs.burn_time

    m0 = (x[0] + cfg.vehicle.fairing_mass
          + cfg.stage1.dry_mass + cfg.stage1.budget.propellant_mass
          + cfg.stage2.dry_mass + cfg.stage2.propellant_mass
          + cfg.stage3.dry_mass + cfg.stage3.propellant_mass
          + cfg.aocs.dry_mass + cfg.aocs.propellant_mass)

    plan = FlightPlan(
        times=times, m0=m0,
        drop_stage1=cfg.stage1.dry_mass + law.residual_mass,
        drop_stage2=cfg.stage2.dry_mass + cfg.vehicle.fairing_mass,
        kick_angle=float(x[6]), launch_azimuth=float(x[7]),
        tan_fpa7=math.tan(math.radians(float(x[8]))),
        tan_fpa8=math.tan(math.radians(float(x[9]))),
        base_pow=100.0 ** float(x[10]),
        stage3_azimuth=float(x[11]),
        injection_fpa=float(x[12]), injection_azimuth=float(x[13]),
        law_knots=law.knots, law_coeffs=law.leg_coeffs,
        p_ref=law.p_ref, burn_time=law.burn_time,
        throat_area_0=law.throat_area_0, erosion_ratio=law.erosion_ratio,
        exit_area=law.exit_area, gamma=law.gamma,
        thrust_eff=law.thrust_efficiency, c_star=law.c_star)
    return plan, law


def initial_state(static: StaticTables, m0: float) -> np.ndarray:
    """Nondimensional initial state on the pad (position, velocity, mass,
    four velocity-budget quadratures)."""
    cl = math.cos(static.lat_rad)
    r0 = np.array([cl * math.cos(static.lon_rad), cl * math.sin(static.lon_rad),
                   math.sin(static.lat_rad)])
    w = static.omega * static.t_unit
    v0 = np.array([-w * r0[1], w * r0[0], 0.0])
    y = np.zeros(11)
    y[0:3] = r0
    y[3:6] = v0
    y[6] = 1.0
    return y
