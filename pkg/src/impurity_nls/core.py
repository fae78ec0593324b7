"""Periodic grids, one-body wave functions and the free Schrödinger flow.

Conventions used throughout the package:

* the free equation is ``i du/dt = -u''`` so a plane wave ``exp(ikx)`` evolves
  as ``exp(ikx - i k**2 t)``;
* integrals over the box are trapezoid sums ``h * sum(f)``, which are
  spectrally accurate for smooth periodic integrands;
* derivatives are Fourier multipliers ``ik``.

FFT scaling is internal; every public quantity (norms, inner products,
energies) is the continuum one approximated by quadrature.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import NumericalFailure


class NonFiniteStateError(NumericalFailure, ValueError):
    """A wave function acquired NaN or infinite amplitudes."""


class GridMismatchError(ValueError):
    """Two states live on different grids."""


class SingularTimeError(ValueError):
    """The free kernel was requested at t = 0."""


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on ``[-L, L)`` with the origin at node ``M // 2``."""

    L: float
    M: int

    def __post_init__(self) -> None:
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"half width L must be positive and finite, got {self.L}")
        if self.M < 2 or self.M & (self.M - 1):
            raise ValueError(f"M must be a power of two >= 2, got {self.M}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.M

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L + self.h * np.arange(self.M)
        x[self.origin] = 0.0
        x.flags.writeable = False
        return x

    @property
    def origin(self) -> int:
        return self.M // 2

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumbers ``pi * m / L`` in FFT ordering."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.M, d=self.h)
        k.flags.writeable = False
        return k

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid1D):
            return NotImplemented
        return self.L == other.L and self.M == other.M

    def __hash__(self) -> int:
        return hash((self.L, self.M))


@dataclass(frozen=True)
class DispersionConvention:
    """The free dispersion relation ``omega(k) = k**2``."""

    @staticmethod
    def omega(k):
        return np.asarray(k) ** 2


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.complex128, copy=True)
        if v.shape != (self.grid.M,):
            raise ValueError(f"expected {self.grid.M} amplitudes, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFiniteStateError("wave function has non-finite amplitudes")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid1D, f) -> WaveFunction:
        return cls(grid, f(grid.x))

    @classmethod
    def zeros(cls, grid: Grid1D) -> WaveFunction:
        return cls(grid, np.zeros(grid.M))

    @property
    def at_origin(self) -> complex:
        return complex(self.values[self.grid.origin])

    def with_values(self, values) -> WaveFunction:
        return WaveFunction(self.grid, values)

    def __mul__(self, c) -> WaveFunction:
        return WaveFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: WaveFunction) -> WaveFunction:
        _check_same_grid(self, other)
        return WaveFunction(self.grid, self.values + other.values)

    def __sub__(self, other: WaveFunction) -> WaveFunction:
        _check_same_grid(self, other)
        return WaveFunction(self.grid, self.values - other.values)


def _check_same_grid(f: WaveFunction, g: WaveFunction) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(f"grid mismatch: {f.grid} vs {g.grid}")


def gaussian(grid: Grid1D, sigma: float = 1.0, x0: float = 0.0, k0: float = 0.0) -> WaveFunction:
    """L2-normalized Gaussian ``(2 pi sigma^2)^(-1/4) exp(-(x-x0)^2 / (4 sigma^2) + i k0 x)``."""
    x = grid.x
    amp = (2.0 * np.pi * sigma**2) ** -0.25
    return WaveFunction(grid, amp * np.exp(-((x - x0) ** 2) / (4.0 * sigma**2) + 1j * k0 * x))


def free_gaussian(x, t: float, sigma: float = 1.0) -> np.ndarray:
    """Closed-form whole-line free evolution of :func:`gaussian` (``x0 = k0 = 0``).

    Completing the square in the Fourier integral gives, with
    ``a = 1 / (4 sigma^2)``, ``u(t, x) = (2 pi sigma^2)^(-1/4) (1 + 4 i a t)^(-1/2)
    exp(-a x^2 / (1 + 4 i a t))``.
    """
    x = np.asarray(x, dtype=float)
    a = 1.0 / (4.0 * sigma**2)
    z = 1.0 + 4j * a * t
    return (2.0 * np.pi * sigma**2) ** -0.25 / np.sqrt(z) * np.exp(-a * x**2 / z)


def l2_norm(psi: WaveFunction) -> float:
    return math.sqrt(psi.grid.h * float(np.sum(np.abs(psi.values) ** 2)))


def inner(f: WaveFunction, g: WaveFunction) -> complex:
    """Hermitian product, conjugate-linear in ``f``."""
    _check_same_grid(f, g)
    return complex(f.grid.h * np.vdot(f.values, g.values))


def derivative(psi: WaveFunction) -> np.ndarray:
    return np.fft.ifft(1j * psi.grid.k * np.fft.fft(psi.values))


def kinetic_norm_sq(psi: WaveFunction) -> float:
    """``||psi'||^2`` via Parseval on the discrete spectrum."""
    c = np.fft.fft(psi.values)
    grid = psi.grid
    return float(grid.h / grid.M * np.sum(grid.k**2 * np.abs(c) ** 2))


def free_propagate(values: np.ndarray, grid: Grid1D, dt: float) -> np.ndarray:
    return np.fft.ifft(np.exp(-1j * grid.k**2 * dt) * np.fft.fft(values))


def free_step(psi: WaveFunction, dt: float) -> WaveFunction:
    """Exact free evolution on the periodic grid over time ``dt``."""
    if not math.isfinite(dt):
        raise ValueError(f"dt must be finite, got {dt}")
    if dt == 0:
        return psi
    return WaveFunction(psi.grid, free_propagate(psi.values, psi.grid, dt))


def free_kernel(t: float, x):
    """Whole-line kernel ``exp(i x^2 / 4t) / sqrt(4 pi i t)``, principal branch."""
    if t == 0:
        raise SingularTimeError("free kernel is singular at t = 0")
    root = cmath.sqrt(4.0 * math.pi * 1j * t)
    x = np.asarray(x, dtype=float)
    out = np.exp(1j * x**2 / (4.0 * t)) / root
    return complex(out) if out.ndim == 0 else out


def energy_delta(phi: WaveFunction, mu: float) -> float:
    """Energy of the point-nonlinearity NLS: ``||phi'||^2 / 2 + mu |phi(0)|^4 / 4``."""
    return 0.5 * kinetic_norm_sq(phi) + 0.25 * mu * abs(phi.at_origin) ** 4


def h1_norm(psi: WaveFunction) -> float:
    return math.sqrt(l2_norm(psi) ** 2 + kinetic_norm_sq(psi))


# -- CSV state format --------------------------------------------------------


def write_state_csv(path, psi: WaveFunction, t: float = 0.0) -> None:
    """Write ``x, re, im`` rows after a ``# L=..,M=..,t=..`` header line."""
    g = psi.grid
    lines = [f"# L={g.L!r},M={g.M},t={float(t)!r}", "x,re,im"]
    for x, v in zip(g.x, psi.values):
        lines.append(f"{float(x):.17g},{v.real:.17g},{v.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_state_csv(path) -> tuple[WaveFunction, float]:
    lines = Path(path).read_text().splitlines()
    header = dict(item.split("=") for item in lines[0].lstrip("# ").split(","))
    grid = Grid1D(float(header["L"]), int(header["M"]))
    rows = np.array([[float(c) for c in ln.split(",")] for ln in lines[2:] if ln])
    return WaveFunction(grid, rows[:, 1] + 1j * rows[:, 2]), float(header["t"])
