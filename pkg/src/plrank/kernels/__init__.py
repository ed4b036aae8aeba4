"""Kernel backend selection.

Two interchangeable implementations of the lambda kernels exist: a compiled
extension built at install time and a pure-numpy fallback.  Both consume
identical inputs (sampling always happens in numpy, upstream of the
kernels) and agree to floating-point reordering error.

The default picks the compiled backend when the extension imported, and
falls back to numpy otherwise.  Set PLRANK_BACKEND=numpy or
PLRANK_BACKEND=compiled to force a choice; forcing "compiled" raises if
the extension is unavailable rather than silently degrading.
"""

from __future__ import annotations

import os

from . import numpy_backend

try:
    from .. import _core as compiled_backend
except ImportError:
    compiled_backend = None

KERNEL_NAMES = (
    "basic_pg_lambdas",
    "placement_pg_lambdas",
    "pl_rank_1_lambdas",
    "pl_rank_2_lambdas",
)

BACKEND_NAMES = ("numpy", "compiled")


def have_compiled() -> bool:
    return compiled_backend is not None


def get_backend(name: str | None = None):
    """Resolve a backend module by name, or pick the default."""
    if name is None:
        name = os.environ.get("PLRANK_BACKEND", "auto")
    if name in ("auto", ""):
        return compiled_backend if compiled_backend is not None else numpy_backend
    if name == "numpy":
        return numpy_backend
    if name == "compiled":
        if compiled_backend is None:
            raise RuntimeError(
                "compiled kernel backend requested but the extension is not "
                "built; reinstall the package or set PLRANK_BACKEND=numpy"
            )
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKEND_NAMES}")


def active_backend_name() -> str:
    return get_backend().NAME
