"""Concurrent ascent-trajectory and first-stage pressure-law optimization."""

__version__ = "0.1.0"

from .atmosphere import AtmoSample, EarthModel, atmosphere_at, mach_number
from .config import ConfigError, MissionConfig, bundled_mission_path, load_config
from .guidance import GuidanceProgram, LaunchSite, reference_azimuth
from .sim import AscentProblem, EvalResult, State, Trajectory, evaluate, propagate
from .srm import (MotorBudget, NozzleSpec, PressureShapeParams,
                  PropellantSpec, ResolvedPressureLaw, UpperStageSpec,
                  resolve_pressure_law)

__all__ = [
    "AtmoSample", "EarthModel", "atmosphere_at", "mach_number",
    "ConfigError", "MissionConfig", "bundled_mission_path", "load_config",
    "GuidanceProgram", "LaunchSite", "reference_azimuth",
    "AscentProblem", "EvalResult", "State", "Trajectory", "evaluate", "propagate",
    "MotorBudget", "NozzleSpec", "PressureShapeParams", "PropellantSpec",
    "ResolvedPressureLaw", "UpperStageSpec", "resolve_pressure_law",
    "__version__",
]
