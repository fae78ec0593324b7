"""Select the compiled kernels when available, else the NumPy fallback.

Set ``IMPURITY_NLS_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from ._kernels_py import ChargeNonconvergenceError, abel_linear_weights
from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("IMPURITY_NLS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND_NAME = "cython" if compiled_backend is not None else "python"


def solve_charge(f, kappa, delta, damping=0.5, tol=1e-12, max_iter=50):
    return backend.solve_charge(f, kappa, delta, damping, tol, max_iter)


def duhamel_point_source(x, g, delta):
    """Point-source integral at each ``x``; depends on ``x`` only through ``x**2``."""
    x = np.asarray(x, dtype=float)
    ax, inverse = np.unique(np.abs(x), return_inverse=True)
    return backend.duhamel_point_source(ax, g, delta)[inverse.reshape(x.shape)]


__all__ = [
    "BACKEND_NAME",
    "ChargeNonconvergenceError",
    "abel_linear_weights",
    "backend",
    "compiled_backend",
    "duhamel_point_source",
    "python_backend",
    "solve_charge",
]
