"""NLS with a cubic nonlinearity concentrated at the origin,

    i dphi/dt = -phi'' + mu |phi|^2 delta_0 phi,

solved through its Duhamel form. Evaluating the Duhamel formula at ``x = 0``
and using ``U(t - s, 0) = 1 / sqrt(4 pi i (t - s))`` gives a closed scalar
Volterra equation with Abel kernel for the charge ``q(t) = phi_t(0)``:

    q(t) = (U(t) phi)(0) - i mu / sqrt(4 pi i) int_0^t (t - s)^(-1/2) |q(s)|^2 q(s) ds.

Once ``q`` is known the state at any mesh time follows from the full Duhamel
formula, a free evolution plus a point-source integral.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .core import WaveFunction, energy_delta, free_propagate
from .kernels import ChargeNonconvergenceError

__all__ = [
    "AbelWeights",
    "ChargeNonconvergenceError",
    "ChargeTrajectory",
    "OffMeshTimeError",
    "box_energy_series",
    "delta_energy_series",
    "free_at_origin",
    "reconstruct",
    "solve_charge",
    "whole_line_moments",
]

_SQRT_4PI_I = cmath.sqrt(4j * math.pi)


class OffMeshTimeError(ValueError):
    """Requested time is not a node of the charge mesh."""


@dataclass(frozen=True)
class AbelWeights:
    """Exact integrals of ``(t_n - s)^(-1/2)`` over the mesh cells before ``t_n``."""

    delta: float
    n: int

    @property
    def omega(self) -> np.ndarray:
        """``omega[j] = 2 (sqrt(t_n - t_j) - sqrt(t_n - t_{j+1}))``, ``j = 0..n-1``."""
        j = np.arange(self.n, dtype=float)
        return 2.0 * (np.sqrt((self.n - j) * self.delta) - np.sqrt((self.n - j - 1) * self.delta))

    @property
    def linear(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights of the left and right node values for a piecewise-linear density.

        Both arrays are indexed by ``j = 0..n-1`` and sum to :attr:`omega`.
        """
        left, right = kernels.abel_linear_weights(self.n, self.delta)
        return left[self.n : 0 : -1], right[self.n : 0 : -1]


@dataclass(frozen=True)
class ChargeTrajectory:
    delta: float
    mu: float
    q: np.ndarray
    f: np.ndarray
    iterations: np.ndarray | None = None

    @property
    def times(self) -> np.ndarray:
        return self.delta * np.arange(self.q.size)

    @property
    def n_max(self) -> int:
        return self.q.size - 1

    @property
    def density(self) -> np.ndarray:
        """``|q|^2 q`` at the mesh nodes."""
        return np.abs(self.q) ** 2 * self.q

    def index_of(self, t: float) -> int:
        n = int(round(t / self.delta))
        if n < 0 or n > self.n_max or abs(n * self.delta - t) > 1e-9 * max(1.0, abs(t)):
            raise OffMeshTimeError(
                f"t={t} is not on the charge mesh (delta={self.delta}, n_max={self.n_max})"
            )
        return n

    def write_csv(self, path) -> None:
        lines = ["t,re_q,im_q,abs_q_sq"]
        for t, z in zip(self.times, self.q):
            lines.append(f"{t:.17g},{z.real:.17g},{z.imag:.17g},{abs(z) ** 2:.17g}")
        Path(path).write_text("\n".join(lines) + "\n")


def _origin_modes(phi: WaveFunction) -> np.ndarray:
    """Fourier coefficients weighted so that their sum is the value at the origin node."""
    M = phi.grid.M
    # the origin is node M/2, where mode m carries the phase (-1)^m
    sign = 1.0 - 2.0 * (np.arange(M) % 2)
    return sign * np.fft.fft(phi.values) / M


def free_at_origin(phi: WaveFunction, t) -> complex | np.ndarray:
    """``(U(t) phi)(0)`` from the spectral representation on the grid."""
    grid = phi.grid
    c = _origin_modes(phi)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    k2 = grid.k**2
    vals = np.array([np.sum(c * np.exp(-1j * k2 * s)) for s in ts])
    return complex(vals[0]) if np.ndim(t) == 0 else vals


def solve_charge(
    phi: WaveFunction,
    mu: float,
    delta: float,
    n_max: int,
    *,
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> ChargeTrajectory:
    if not delta > 0:
        raise ValueError(f"charge mesh step must be positive, got {delta}")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    f = _free_origin_series(phi, delta, n_max)
    if mu == 0:
        return ChargeTrajectory(delta, mu, f.copy(), f, np.zeros(n_max + 1, dtype=np.int64))
    kappa = -1j * mu / _SQRT_4PI_I
    q, iters = kernels.solve_charge(f, kappa, delta, damping, tol, max_iter)
    return ChargeTrajectory(delta, mu, q, f, iters)


def _free_origin_series(phi: WaveFunction, delta: float, n_max: int) -> np.ndarray:
    grid = phi.grid
    c = _origin_modes(phi)
    # blocked to bound the (times x modes) phase matrix
    out = np.empty(n_max + 1, dtype=np.complex128)
    k2 = grid.k**2
    block = 256
    for start in range(0, n_max + 1, block):
        n = np.arange(start, min(start + block, n_max + 1))
        out[n] = np.exp(-1j * np.outer(n * delta, k2)) @ c
    return out


def reconstruct(phi: WaveFunction, traj: ChargeTrajectory, t: float) -> WaveFunction:
    """State at mesh time ``t`` from the Duhamel formula with the solved charge."""
    n = traj.index_of(t)
    grid = phi.grid
    free = free_propagate(phi.values, grid, n * traj.delta) if n else np.array(phi.values)
    if n == 0 or traj.mu == 0:
        return WaveFunction(grid, free)
    source = kernels.duhamel_point_source(grid.x, traj.density[: n + 1], traj.delta)
    return WaveFunction(grid, free - 1j * traj.mu / _SQRT_4PI_I * source)


def _increment_weights(omega: np.ndarray, delta: float) -> tuple[np.ndarray, np.ndarray]:
    """``int_0^delta e^{i omega s} ds`` and ``int_0^delta (s / delta) e^{i omega s} ds``."""
    theta = omega * delta
    small = np.abs(theta) < 1e-3
    th = np.where(small, 1.0, theta)
    e = np.exp(1j * th)
    alpha = (e - 1.0) / (1j * th)
    beta = e / (1j * th) - (e - 1.0) / (1j * th) ** 2
    t = theta[small]
    alpha[small] = 1.0 + 0.5j * t - t**2 / 6.0 - 1j * t**3 / 24.0
    beta[small] = 0.5 + 1j * t / 3.0 - t**2 / 8.0 - 1j * t**3 / 30.0
    return delta * alpha, delta * beta


def whole_line_moments(
    phi: WaveFunction, traj: ChargeTrajectory, sample_times, pad: int = 16
) -> tuple[np.ndarray, np.ndarray]:
    """``||phi_t||^2`` and ``||phi_t'||^2`` of the whole-line solution at mesh times.

    The Duhamel formula in Fourier variables reads

        hat phi_t(k) = e^{-i k^2 t} (hat phi(k) - i mu / sqrt(2 pi) int_0^t e^{i k^2 s} g(s) ds)

    with ``g = |q|^2 q`` piecewise linear on the charge mesh. Unlike grid norms
    of :func:`reconstruct`, these include radiation that has left the box.
    The spectrum is sampled on a ``pad``-times refined wavenumber grid up to
    the grid cutoff ``pi / h``; the kinetic integrand decays like
    ``mu^2 (|g(t)|^2 + |g(0)|^2) / (2 pi k^2)`` beyond it and that tail is
    added in closed form.
    """
    grid = phi.grid
    idx = [traj.index_of(t) for t in sample_times]
    P = pad * grid.M
    k = 2.0 * np.pi * np.fft.fftfreq(P, d=grid.h)
    dk = 2.0 * np.pi / (P * grid.h)
    k_cut = np.pi / grid.h
    padded = np.zeros(P, dtype=np.complex128)
    padded[: grid.M] = phi.values
    # unitary transform of the box-supported datum; x_0 = -L
    phat0 = grid.h / math.sqrt(2.0 * math.pi) * np.exp(1j * k * grid.L) * np.fft.fft(padded)

    omega = k**2
    w0, w1 = _increment_weights(omega, traj.delta)
    rot = np.exp(1j * omega * traj.delta)
    g = traj.density
    coef = -1j * traj.mu / math.sqrt(2.0 * math.pi)

    wanted = {n: i for i, n in enumerate(idx)}
    mass = np.empty(len(idx))
    kin = np.empty(len(idx))
    G = np.zeros(P, dtype=np.complex128)
    z = np.ones(P, dtype=np.complex128)
    for n in range(max(idx, default=0) + 1):
        if n in wanted:
            spec = np.abs(phat0 + coef * G) ** 2
            i = wanted[n]
            mass[i] = dk * np.sum(spec)
            tail = traj.mu**2 * (abs(g[n]) ** 2 + abs(g[0]) ** 2) / (np.pi * k_cut) if n else 0.0
            kin[i] = dk * np.sum(omega * spec) + tail
        if n < traj.n_max:
            G += z * (g[n] * (w0 - w1) + g[n + 1] * w1)
            z *= rot
    return mass, kin


def delta_energy_series(phi: WaveFunction, traj: ChargeTrajectory, sample_times) -> np.ndarray:
    """Energy ``||phi_t'||^2 / 2 + mu |q(t)|^4 / 4`` of the whole-line solution."""
    _, kin = whole_line_moments(phi, traj, sample_times)
    q = np.array([traj.q[traj.index_of(t)] for t in sample_times])
    return 0.5 * kin + 0.25 * traj.mu * np.abs(q) ** 4


def box_energy_series(phi: WaveFunction, traj: ChargeTrajectory, sample_times) -> np.ndarray:
    """Energy of the reconstructed grid states; misses radiation that left the box."""
    return np.array([energy_delta(reconstruct(phi, traj, t), traj.mu) for t in sample_times])
