"""Impurity bump ``w``, its scaled version ``w_eps`` and the concentrated coupling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core import Grid1D, WaveFunction
from .errors import GuardViolation


class UnresolvedBumpError(GuardViolation):
    """The grid spacing is too coarse for the requested bump width."""


#: minimum number of grid spacings per bump width
RESOLUTION_FACTOR = 4


def _gaussian_profile(x):
    return np.exp(-np.asarray(x, dtype=float) ** 2) / math.sqrt(math.pi)


@dataclass(frozen=True)
class BumpProfile:
    """Even, positive, rapidly decaying profile with unit integral."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.func(x)

    @classmethod
    def gaussian(cls) -> BumpProfile:
        return cls("gaussian", _gaussian_profile)

    @classmethod
    def from_table(cls, xs, ws, name: str = "tabulated") -> BumpProfile:
        """Profile interpolated from samples on ``x >= 0`` or a symmetric table.

        Validates evenness (1e-8) and unit integral (1e-6); values outside the
        table are zero.
        """
        xs = np.asarray(xs, dtype=float)
        ws = np.asarray(ws, dtype=float)
        order = np.argsort(xs)
        xs, ws = xs[order], ws[order]
        if np.any(ws < 0):
            raise ValueError("bump profile must be nonnegative")
        if xs[0] < 0:
            mirrored = np.interp(-xs, xs, ws, left=0.0, right=0.0)
            if np.max(np.abs(mirrored - ws)) > 1e-8:
                raise ValueError("tabulated profile is not even within 1e-8")
            integral = np.trapezoid(ws, xs)
        else:
            integral = 2.0 * np.trapezoid(ws, xs)
        if abs(integral - 1.0) > 1e-6:
            raise ValueError(f"tabulated profile integrates to {integral}, expected 1 within 1e-6")

        def func(x, xs=xs, ws=ws, symmetric=xs[0] < 0):
            x = np.asarray(x, dtype=float)
            q = x if symmetric else np.abs(x)
            return np.interp(q, xs, ws, left=0.0, right=0.0)

        return cls(name, func)

    @classmethod
    def from_csv(cls, path) -> BumpProfile:
        data = np.loadtxt(Path(path), delimiter=",", comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns (x, w)")
        return cls.from_table(data[:, 0], data[:, 1], name=str(path))


def get_profile(name: str) -> BumpProfile:
    if name == "gaussian":
        return BumpProfile.gaussian()
    if name.endswith(".csv"):
        return BumpProfile.from_csv(name)
    raise ValueError(f"unknown bump profile {name!r}")


@dataclass(frozen=True)
class ScaledBump:
    """``w_eps(x) = w(x / eps) / eps``."""

    epsilon: float
    profile: BumpProfile = BumpProfile.gaussian()

    def __post_init__(self) -> None:
        if not (0 < self.epsilon and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    def __call__(self, x):
        return self.profile(np.asarray(x, dtype=float) / self.epsilon) / self.epsilon

    def check_resolved(self, grid: Grid1D) -> None:
        if self.epsilon < RESOLUTION_FACTOR * grid.h:
            raise UnresolvedBumpError(
                f"bump width eps={self.epsilon} is below {RESOLUTION_FACTOR}*h "
                f"(h={grid.h}); refine the grid or increase eps"
            )

    def on_grid(self, grid: Grid1D) -> np.ndarray:
        return self(grid.x)


def eval_w_eps(b: ScaledBump, x):
    return b(x)


def pair_potential(b: ScaledBump, xk, xl):
    """Three-body potential with the impurity at the origin: ``w_eps(xk) w_eps(xl)``."""
    return b(xk) * b(xl)


def coupling(b: ScaledBump, u: WaveFunction) -> float:
    """``<w_eps, |u|^2>`` by trapezoid quadrature."""
    b.check_resolved(u.grid)
    return coupling_values(b.on_grid(u.grid), u.values, u.grid.h)


def coupling_values(w: np.ndarray, values: np.ndarray, h: float) -> float:
    return float(h * np.dot(w, values.real**2 + values.imag**2))


def epsilon_of_N(N: int) -> float:
    """Bump width ``(log N)^(-1/2)`` tied to the particle number."""
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    return 1.0 / math.sqrt(math.log(N))
