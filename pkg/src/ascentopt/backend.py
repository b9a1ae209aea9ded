"""Propagation backend selection.

The compiled kernel is used when its extension module imported cleanly; the
pure-python kernel is always available as a fallback and for cross-checking.
``ASCENTOPT_BACKEND`` (``auto`` | ``compiled`` | ``python``) overrides the
default.
"""

from __future__ import annotations

import os

import numpy as np

from ._kernelspec import FlightPlan, StaticTables
from . import _pykernel

try:
    from . import _core
except ImportError:  # extension not built on this install
    _core = None

__all__ = ["available_backends", "default_backend", "resolve_backend", "propagate_plan"]

_kernel_cache: dict[int, tuple[StaticTables, object]] = {}


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _core is not None else ("python",)


def default_backend() -> str:
    env = os.environ.get("ASCENTOPT_BACKEND", "auto").strip().lower()
    if env not in ("", "auto", "compiled", "python"):
        raise ValueError(f"ASCENTOPT_BACKEND must be auto|compiled|python, got {env!r}")
    if env in ("", "auto"):
        return "compiled" if _core is not None else "python"
    if env == "compiled" and _core is None:
        raise RuntimeError("compiled backend requested but ascentopt._core is not built")
    return env


def resolve_backend(name: str | None) -> str:
    if name is None or name == "auto":
        return default_backend()
    if name == "compiled" and _core is None:
        raise RuntimeError("compiled backend requested but ascentopt._core is not built")
    if name not in ("compiled", "python"):
        raise ValueError(f"unknown backend {name!r}")
    return name


def _compiled_kernel(static: StaticTables):
    entry = _kernel_cache.get(id(static))
    if entry is not None and entry[0] is static:
        return entry[1]
    kernel = _core.Kernel(static)
    _kernel_cache[id(static)] = (static, kernel)
    return kernel


def propagate_plan(static: StaticTables, plan: FlightPlan, dense: bool = False,
                   backend: str | None = None
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Run one propagation on the selected backend.

    Returns (output slots, boundary-state table, dense sample rows or None).
    """
    name = resolve_backend(backend)
    if name == "compiled":
        return _compiled_kernel(static).run(plan, dense)
    return _pykernel.propagate(static, plan, dense)
