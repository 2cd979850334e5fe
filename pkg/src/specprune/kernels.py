"""Backend selection for the hot ADMM update.

At import time the compiled Cython kernel is preferred; setting the
environment variable SPECPRUNE_PURE_PYTHON (to anything non-empty) or a
missing extension selects the numpy fallback. The two backends compute the
same elementwise values; only reduction order may differ, at machine
precision, and each backend is individually deterministic.
"""

from __future__ import annotations

import os
from typing import Callable

from . import _kernels_py

StepFn = Callable[..., tuple[float, float, float]]

_IMPLS: dict[str, StepFn] = {"python": _kernels_py.admm_elementwise_step}

if not os.environ.get("SPECPRUNE_PURE_PYTHON"):
    try:
        from . import _kernels  # type: ignore[attr-defined]

        _IMPLS["compiled"] = _kernels.admm_elementwise_step
    except ImportError:
        pass

DEFAULT_BACKEND: str = "compiled" if "compiled" in _IMPLS else "python"
ACTIVE_BACKEND: str = DEFAULT_BACKEND


def available_backends() -> tuple[str, ...]:
    """Names of the step implementations importable in this process."""
    return tuple(sorted(_IMPLS))


def get_step(backend: str | None = None) -> StepFn:
    """Return a step implementation by name (default: the active backend)."""
    name = backend or ACTIVE_BACKEND
    try:
        return _IMPLS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}") from None


def use_backend(backend: str) -> None:
    """Switch the process-wide active backend (used by the benchmark)."""
    global ACTIVE_BACKEND
    if backend not in _IMPLS:
        raise ValueError(f"unknown backend {backend!r}; have {available_backends()}")
    ACTIVE_BACKEND = backend


def admm_elementwise_step(a, u, z, tau, nonneg):
    """Dispatch to the active backend's fused update."""
    return _IMPLS[ACTIVE_BACKEND](a, u, z, tau, nonneg)
