"""Mission configuration: schema, TOML loading and decision-vector bounds.

A mission file is a single TOML document with explicit units in every field
name.  Table-level defaults (structural limits, optimizer settings, the drag
curve) are filled in when omitted.  Validation collects per-field messages
rather than stopping at the first problem, so the CLI can print actionable
diagnostics and exit with a schema-error status.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .atmosphere import EarthModel
from .guidance import LaunchSite, reference_azimuth
from .srm import (SHAPE_BOUNDS, SHAPE_FIELDS, MotorBudget, NozzleSpec,
                  PropellantSpec, PressureShapeParams, UpperStageSpec,
                  resolve_pressure_law)

__all__ = [
    "ConfigError",
    "ConstraintLimits",
    "DragTable",
    "MissionConfig",
    "OptimizerSettings",
    "Stage1Config",
    "TargetOrbit",
    "VehicleConfig",
    "DECISION_NAMES",
    "load_config",
    "bundled_mission_path",
    "physics_sanity",
]

_REQUIRED = object()


class ConfigError(ValueError):
    """Invalid mission file; ``problems`` lists per-field diagnostics."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


# default drag curve of a generic slender launcher (representative, not a
# measured dataset): subsonic plateau, transonic rise, supersonic decay
_DEFAULT_DRAG_MACH = (0.0, 0.5, 0.8, 0.95, 1.05, 1.2, 1.5, 2.0, 3.0, 5.0, 8.0, 12.0)
_DEFAULT_DRAG_CD = (0.48, 0.48, 0.52, 0.75, 1.12, 1.15, 0.99, 0.82, 0.60, 0.44, 0.38, 0.36)


@dataclass(frozen=True)
class TargetOrbit:
    altitude: float        # m above the spherical surface
    inclination: float     # deg
    radius_tol: float = 50.0       # m
    inclination_tol: float = 0.01  # deg


@dataclass(frozen=True)
class DragTable:
    mach: np.ndarray
    cd: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.mach, dtype=float)
        c = np.asarray(self.cd, dtype=float)
        if m.ndim != 1 or m.shape != c.shape or m.size < 2:
            raise ValueError("drag table needs matching mach/cd lists of length >= 2")
        if not np.all(np.diff(m) > 0):
            raise ValueError("drag table mach values must be strictly increasing")
        if not (np.all(c >= 0) and np.all(np.isfinite(c)) and np.all(m >= 0)):
            raise ValueError("drag table entries must be finite and non-negative")
        object.__setattr__(self, "mach", m)
        object.__setattr__(self, "cd", c)


@dataclass(frozen=True)
class VehicleConfig:
    s_ref: float            # drag reference area, m^2
    fairing_mass: float     # kg
    interstage_coast: float  # s between stage-1 release and stage-2 ignition
    payload_min: float      # kg
    payload_max: float      # kg
    drag: DragTable


@dataclass(frozen=True)
class Stage1Config:
    dry_mass: float
    budget: MotorBudget
    propellant: PropellantSpec
    nozzle: NozzleSpec


@dataclass(frozen=True)
class ConstraintLimits:
    q_max: float = 54000.0           # Pa
    bending_max: float = 78000.0     # Pa deg
    axial_stage1_g: float = 4.0
    axial_later_g: float = 5.0
    heat_flux_max: float = 900.0     # W/m^2
    pitch_rate_max: float = 2.0      # deg/s


@dataclass(frozen=True)
class OptimizerSettings:
    islands: int = 8
    population: int = 50
    generations: int = 5000
    seed: int = 0
    migration_interval: int = 100
    migration_count: int = 2
    epidemic_patience: int = 500
    epidemic_keep_frac: float = 0.1
    restarts: int = 1
    workers: int = 0                 # 0 = auto (cpu count, capped by env)
    eps_start: float = 0.05
    eps_final: float = 1e-8
    ramp_start_frac: float = 1.0 / 6.0

    def __post_init__(self) -> None:
        if self.population < 5:
            raise ValueError("population must be at least 5 (mutation needs "
                             "four distinct donors plus the target)")
        if self.islands < 1 or self.generations < 1 or self.restarts < 1:
            raise ValueError("islands, generations and restarts must be positive")
        if not self.eps_start > self.eps_final > 0:
            raise ValueError("tolerance schedule must decrease to a positive floor")


# fixed search windows of the flight/steering variables; the azimuth window
# is centred on the mission's reference azimuth at load time, the payload
# window comes from the vehicle section, the motor windows from SHAPE_BOUNDS
_FLIGHT_GUIDANCE_BOUNDS = {
    "pitch_duration_s": (5.0, 15.0),
    "recovery_duration_s": (1.0, 8.0),
    "stage1_burn_s": (85.0, 120.0),
    "coast23_s": (1.0, 100.0),
    "coast34_s": (1.0, 5400.0),
    "kick_angle_deg": (70.0, 89.9),
    "stage3_fpa_start_deg": (-15.0, 15.0),
    "stage3_fpa_end_deg": (-15.0, 15.0),
    "stage3_curvature": (-1.0, 0.0),
    "stage3_azimuth_deg": (-180.0, 180.0),
    "injection_fpa_deg": (-10.0, 10.0),
    "injection_azimuth_deg": (-180.0, 180.0),
}

DECISION_NAMES = (
    "payload_kg",
    "pitch_duration_s", "recovery_duration_s", "stage1_burn_s",
    "coast23_s", "coast34_s",
    "kick_angle_deg", "launch_azimuth_deg",
    "stage3_fpa_start_deg", "stage3_fpa_end_deg", "stage3_curvature",
    "stage3_azimuth_deg", "injection_fpa_deg", "injection_azimuth_deg",
    "p_ignition", "f_peak", "p_shoulder", "f_ramp",
    "p_ramp_end", "f_cruise", "p_cruise_end", "p_tailoff",
)

_MOTOR_OFFSET = 14  # index of the first motor shape variable


@dataclass(frozen=True)
class MissionConfig:
    name: str
    target: TargetOrbit
    site: LaunchSite
    liftoff_duration: float
    earth: EarthModel
    vehicle: VehicleConfig
    stage1: Stage1Config
    stage2: UpperStageSpec
    stage3: UpperStageSpec
    aocs: UpperStageSpec
    limits: ConstraintLimits
    optimizer: OptimizerSettings
    bounds_overrides: dict = field(default_factory=dict)

    @property
    def target_radius(self) -> float:
        return self.earth.radius + self.target.altitude

    @property
    def launch_azimuth_ref(self) -> float:
        return reference_azimuth(self.target.inclination, self.site.latitude)

    def decision_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """(lower, upper) arrays over :data:`DECISION_NAMES`."""
        ref = self.launch_azimuth_ref
        table = dict(_FLIGHT_GUIDANCE_BOUNDS)
        table["payload_kg"] = (self.vehicle.payload_min, self.vehicle.payload_max)
        table["launch_azimuth_deg"] = (ref - 5.0, ref + 5.0)
        table.update({name: SHAPE_BOUNDS[name] for name in SHAPE_FIELDS})
        table.update(self.bounds_overrides)
        lo = np.array([table[n][0] for n in DECISION_NAMES])
        hi = np.array([table[n][1] for n in DECISION_NAMES])
        return lo, hi

    def shape_params(self, x: np.ndarray) -> PressureShapeParams:
        return PressureShapeParams.from_array(x[_MOTOR_OFFSET:_MOTOR_OFFSET + 8])

    def with_optimizer(self, **kwargs) -> "MissionConfig":
        return replace(self, optimizer=replace(self.optimizer, **kwargs))


class _Reader:
    """Walks the parsed TOML tree, collecting per-field problems."""

    def __init__(self, data: dict):
        self.data = data
        self.problems: list[str] = []
        self.seen: set[str] = set()

    def section(self, name: str, required: bool = True) -> dict:
        self.seen.add(name.split(".")[0])
        node = self.data
        for part in name.split("."):
            node = node.get(part, {}) if isinstance(node, dict) else {}
        if not node and required:
            self.problems.append(f"{name}: section is missing")
        if not isinstance(node, dict):
            self.problems.append(f"{name}: expected a section")
            return {}
        return node

    def number(self, sec: dict, path: str, key: str, default=_REQUIRED,
               lo: float | None = None, hi: float | None = None) -> float:
        if key not in sec:
            if default is _REQUIRED:
                self.problems.append(f"{path}.{key}: required field is missing")
                return math.nan
            return float(default)
        v = sec[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.problems.append(f"{path}.{key}: expected a number, got {v!r}")
            return math.nan
        v = float(v)
        if not math.isfinite(v):
            self.problems.append(f"{path}.{key}: must be finite")
        if lo is not None and v < lo:
            self.problems.append(f"{path}.{key}: must be >= {lo}, got {v}")
        if hi is not None and v > hi:
            self.problems.append(f"{path}.{key}: must be <= {hi}, got {v}")
        return v

    def integer(self, sec: dict, path: str, key: str, default=_REQUIRED,
                lo: int | None = None) -> int:
        if key not in sec:
            if default is _REQUIRED:
                self.problems.append(f"{path}.{key}: required field is missing")
                return 0
            return int(default)
        v = sec[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.problems.append(f"{path}.{key}: expected an integer, got {v!r}")
            return 0
        if lo is not None and v < lo:
            self.problems.append(f"{path}.{key}: must be >= {lo}, got {v}")
        return v

    def build(self, path: str, factory, /, **kwargs):
        if self.problems:
            return None
        try:
            return factory(**kwargs)
        except ValueError as exc:
            self.problems.append(f"{path}: {exc}")
            return None


def _load_toml(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_config(path: str | Path) -> MissionConfig:
    """Parse and validate a mission file; raises :class:`ConfigError`."""
    try:
        data = _load_toml(path)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"(file): not valid TOML: {exc}"]) from exc
    return config_from_dict(data)


def config_from_dict(data: dict) -> MissionConfig:
    r = _Reader(data)

    mission = r.section("mission")
    name = mission.get("name", "unnamed")
    target = r.build("mission", TargetOrbit,
                     altitude=1e3 * r.number(mission, "mission", "target_altitude_km", lo=100.0),
                     inclination=r.number(mission, "mission", "target_inclination_deg",
                                          lo=0.0, hi=180.0),
                     radius_tol=r.number(mission, "mission", "radius_tolerance_m",
                                         default=50.0, lo=0.0),
                     inclination_tol=r.number(mission, "mission", "inclination_tolerance_deg",
                                              default=0.01, lo=0.0))

    launch = r.section("launch")
    site = r.build("launch", LaunchSite,
                   latitude=r.number(launch, "launch", "latitude_deg", lo=-89.9, hi=89.9),
                   longitude=r.number(launch, "launch", "longitude_deg", lo=-180.0, hi=360.0))
    liftoff_duration = r.number(launch, "launch", "liftoff_duration_s", default=5.0, lo=1.0)

    earth_sec = r.section("earth", required=False)
    earth = r.build("earth", EarthModel,
                    mu=r.number(earth_sec, "earth", "mu_m3_s2", default=3.986004418e14),
                    radius=r.number(earth_sec, "earth", "radius_m", default=6378137.0),
                    spin_rate=r.number(earth_sec, "earth", "spin_rate_rad_s",
                                       default=7.2921150e-5))

    veh = r.section("vehicle")
    drag_sec = veh.get("drag", {})
    drag_mach = drag_sec.get("mach", list(_DEFAULT_DRAG_MACH))
    drag_cd = drag_sec.get("cd", list(_DEFAULT_DRAG_CD))
    drag = r.build("vehicle.drag", DragTable, mach=drag_mach, cd=drag_cd)
    vehicle = r.build("vehicle", VehicleConfig,
                      s_ref=r.number(veh, "vehicle", "s_ref_m2", lo=1e-6),
                      fairing_mass=r.number(veh, "vehicle", "fairing_mass_kg", lo=0.0),
                      interstage_coast=r.number(veh, "vehicle", "interstage_coast_s", lo=1e-6),
                      payload_min=r.number(veh, "vehicle", "payload_min_kg", lo=0.0),
                      payload_max=r.number(veh, "vehicle", "payload_max_kg", lo=0.0),
                      drag=drag)
    if vehicle and not vehicle.payload_min < vehicle.payload_max:
        r.problems.append("vehicle.payload_min_kg: must be below vehicle.payload_max_kg")

    s1 = r.section("stage1")
    budget = r.build("stage1.motor", MotorBudget,
                     propellant_mass=r.number(r.section("stage1.motor"), "stage1.motor",
                                              "propellant_mass_kg", lo=1.0),
                     tailoff_mass=r.number(r.section("stage1.motor"), "stage1.motor",
                                           "tailoff_mass_kg", lo=0.0),
                     tailoff_start_frac=r.number(r.section("stage1.motor"), "stage1.motor",
                                                 "tailoff_start_frac"),
                     max_operating_pressure=r.number(r.section("stage1.motor"), "stage1.motor",
                                                     "max_operating_pressure_pa", lo=1.0),
                     separation_pressure=r.number(r.section("stage1.motor"), "stage1.motor",
                                                  "separation_pressure_pa", lo=0.0))
    prop_sec = r.section("stage1.propellant")
    propellant = r.build("stage1.propellant", PropellantSpec,
                         gamma=r.number(prop_sec, "stage1.propellant", "gamma", lo=1.0001),
                         molar_mass=r.number(prop_sec, "stage1.propellant",
                                             "molar_mass_kg_mol", lo=1e-4),
                         chamber_temp=r.number(prop_sec, "stage1.propellant",
                                               "chamber_temp_k", lo=1.0),
                         cstar_efficiency=r.number(prop_sec, "stage1.propellant",
                                                   "cstar_efficiency", lo=0.1, hi=1.0),
                         thrust_efficiency=r.number(prop_sec, "stage1.propellant",
                                                    "thrust_efficiency", lo=0.1, hi=1.0))
    noz_sec = r.section("stage1.nozzle")
    nozzle = r.build("stage1.nozzle", NozzleSpec,
                     throat_radius=r.number(noz_sec, "stage1.nozzle", "throat_radius_m", lo=1e-4),
                     erosion=r.number(noz_sec, "stage1.nozzle", "erosion_m", lo=0.0),
                     exit_area=r.number(noz_sec, "stage1.nozzle", "exit_area_m2", lo=1e-6))
    stage1 = r.build("stage1", Stage1Config,
                     dry_mass=r.number(s1, "stage1", "dry_mass_kg", lo=0.0),
                     budget=budget, propellant=propellant, nozzle=nozzle)

    def upper(section: str) -> UpperStageSpec | None:
        sec = r.section(section)
        return r.build(section, UpperStageSpec,
                       thrust_vac=r.number(sec, section, "thrust_vac_n", lo=1.0),
                       isp_vac=r.number(sec, section, "isp_vac_s", lo=1.0),
                       propellant_mass=r.number(sec, section, "propellant_mass_kg", lo=0.1),
                       dry_mass=r.number(sec, section, "dry_mass_kg", lo=0.0))

    stage2 = upper("stage2")
    stage3 = upper("stage3")
    aocs = upper("aocs")

    lim = r.section("limits", required=False)
    limits = r.build("limits", ConstraintLimits,
                     q_max=r.number(lim, "limits", "q_max_pa", default=54000.0, lo=1.0),
                     bending_max=r.number(lim, "limits", "bending_max_pa_deg",
                                          default=78000.0, lo=1.0),
                     axial_stage1_g=r.number(lim, "limits", "axial_max_stage1_g",
                                             default=4.0, lo=0.1),
                     axial_later_g=r.number(lim, "limits", "axial_max_later_g",
                                            default=5.0, lo=0.1),
                     heat_flux_max=r.number(lim, "limits", "heat_flux_max_w_m2",
                                            default=900.0, lo=1.0),
                     pitch_rate_max=r.number(lim, "limits", "pitch_rate_max_deg_s",
                                             default=2.0, lo=0.01))

    opt = r.section("optimizer", required=False)
    optimizer = r.build("optimizer", OptimizerSettings,
                        islands=r.integer(opt, "optimizer", "islands", default=8, lo=1),
                        population=r.integer(opt, "optimizer", "population", default=50, lo=5),
                        generations=r.integer(opt, "optimizer", "generations",
                                              default=5000, lo=1),
                        seed=r.integer(opt, "optimizer", "seed", default=0, lo=0),
                        migration_interval=r.integer(opt, "optimizer", "migration_interval",
                                                     default=100, lo=1),
                        migration_count=r.integer(opt, "optimizer", "migration_count",
                                                  default=2, lo=0),
                        epidemic_patience=r.integer(opt, "optimizer", "epidemic_patience",
                                                    default=500, lo=1),
                        epidemic_keep_frac=r.number(opt, "optimizer", "epidemic_keep_frac",
                                                    default=0.1, lo=0.0, hi=1.0),
                        restarts=r.integer(opt, "optimizer", "restarts", default=1, lo=1),
                        workers=r.integer(opt, "optimizer", "workers", default=0, lo=0))

    overrides: dict[str, tuple[float, float]] = {}
    bounds_sec = r.section("bounds", required=False)
    for key, val in bounds_sec.items():
        if key not in DECISION_NAMES:
            r.problems.append(f"bounds.{key}: unknown decision variable")
            continue
        if (not isinstance(val, (list, tuple)) or len(val) != 2
                or not all(isinstance(v, (int, float)) for v in val)):
            r.problems.append(f"bounds.{key}: expected [lower, upper]")
            continue
        overrides[key] = (float(val[0]), float(val[1]))

    known = {"mission", "launch", "earth", "vehicle", "stage1", "stage2",
             "stage3", "aocs", "limits", "optimizer", "bounds"}
    for key in data:
        if key not in known:
            r.problems.append(f"{key}: unknown section")

    if r.problems:
        raise ConfigError(r.problems)

    cfg = MissionConfig(
        name=name, target=target, site=site, liftoff_duration=liftoff_duration,
        earth=earth, vehicle=vehicle, stage1=stage1, stage2=stage2,
        stage3=stage3, aocs=aocs, limits=limits, optimizer=optimizer,
        bounds_overrides=overrides)

    problems = _cross_checks(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def _cross_checks(cfg: MissionConfig) -> list[str]:
    problems = []
    try:
        cfg.launch_azimuth_ref
    except ValueError as exc:
        problems.append(f"mission.target_inclination_deg: {exc}")
        return problems
    lo, hi = cfg.decision_bounds()
    for nm, lo_v, hi_v in zip(DECISION_NAMES, lo, hi):
        if not lo_v < hi_v:
            problems.append(f"bounds.{nm}: lower bound {lo_v} must be below upper {hi_v}")
    return problems


def physics_sanity(cfg: MissionConfig) -> list[str]:
    """Deeper feasibility checks used by the CLI ``validate`` command.

    Confirms the pressure law resolves (with mass closure) at the corner and
    centre points of the motor search box, that the nozzle expansion remains
    supersonic, and that the early-flight schedule always ends before stage-1
    tail-off begins.
    """
    problems = []
    lo, hi = cfg.decision_bounds()
    mlo, mhi = lo[_MOTOR_OFFSET:], hi[_MOTOR_OFFSET:]
    burn_lo, burn_hi = lo[3], hi[3]
    for tag, shape, burn in (("all-lower", mlo, burn_lo),
                             ("all-upper", mhi, burn_hi),
                             ("centre", 0.5 * (mlo + mhi), 0.5 * (burn_lo + burn_hi))):
        try:
            law = resolve_pressure_law(PressureShapeParams.from_array(shape),
                                       cfg.stage1.budget, cfg.stage1.propellant,
                                       cfg.stage1.nozzle, burn)
        except ValueError as exc:
            problems.append(f"stage1.motor: {tag} corner does not resolve: {exc}")
            continue
        rel = abs(law.mass_closure() - cfg.stage1.budget.propellant_mass) \
            / cfg.stage1.budget.propellant_mass
        if rel > 1e-9:
            problems.append(f"stage1.motor: {tag} corner misses mass closure ({rel:.2e})")
    latest_recovery = cfg.liftoff_duration + hi[1] + hi[2]
    earliest_release = cfg.stage1.budget.tailoff_start_frac * burn_lo
    if latest_recovery >= earliest_release:
        problems.append("launch.liftoff_duration_s: lift-off + pitch-over + recovery can "
                        "outlast the stage-1 burn to tail-off")
    return problems


def bundled_mission_path() -> Path:
    """Path of the representative mission file shipped with the package."""
    return Path(__file__).resolve().parent / "data" / "sso500.toml"
