"""Exact small-N dynamics for bosons coupled through the impurity.

The N-body Hamiltonian is

    H_N = -sum_j d^2/dx_j^2 + (mu / N) sum_{k<l} w_eps(x_k) w_eps(x_l)

on the tensor grid ``Grid1D^N``. States are dense rank-N arrays, so this is
only meant for N <= 4 at modest M.

Quadrature normalization: an amplitude tensor is normalized when
``h**N * sum |Psi|^2 = 1``. A reduced density stores the kernel values
``gamma(x_i, x_j)``; the operator acting on grid functions is ``h * gamma``,
and that is the matrix whose eigenvalues approximate the continuum spectrum.
Every spectral quantity below (eigenvalues, trace norms) uses ``h * gamma``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import GuardViolation
from .core import Grid1D, WaveFunction, inner, kinetic_norm_sq, l2_norm
from .hartree import check_time_step
from .potentials import ScaledBump, coupling

#: largest number of tensor entries a state may hold
MAX_ENTRIES = 2**27


class MemoryBudgetError(GuardViolation):
    """The requested tensor exceeds :data:`MAX_ENTRIES`."""


def check_memory(M: int, N: int) -> None:
    if M**N > MAX_ENTRIES:
        raise MemoryBudgetError(
            f"M^N = {M}^{N} = {M**N} entries exceeds the budget of 2^27 = {MAX_ENTRIES}"
        )


@dataclass(frozen=True, eq=False)
class ManyBodyState:
    grid: Grid1D
    amplitudes: np.ndarray

    @property
    def N(self) -> int:
        return self.amplitudes.ndim

    def norm(self) -> float:
        h = self.grid.h
        return math.sqrt(h**self.N * float(np.sum(np.abs(self.amplitudes) ** 2)))

    def symmetry_residual(self) -> float:
        """Largest deviation under any coordinate transposition."""
        a = self.amplitudes
        worst = 0.0
        for i, j in itertools.combinations(range(self.N), 2):
            worst = max(worst, float(np.max(np.abs(a - np.swapaxes(a, i, j)))))
        return worst

    def overlap(self, other: ManyBodyState) -> complex:
        return complex(self.grid.h**self.N * np.vdot(self.amplitudes, other.amplitudes))


def build_factorized(phi: WaveFunction, N: int) -> ManyBodyState:
    if abs(l2_norm(phi) - 1.0) > 1e-8:
        raise ValueError(f"one-body datum must be normalized, ||phi|| = {l2_norm(phi)}")
    check_memory(phi.grid.M, N)
    out = phi.values
    for _ in range(N - 1):
        out = np.multiply.outer(out, phi.values)
    return ManyBodyState(phi.grid, np.array(out))


def build_defect_state(phi: WaveFunction, phi_perp: WaveFunction, N: int) -> ManyBodyState:
    """Normalized symmetrization of ``phi^(N-1) (x) phi_perp``."""
    _check_orthonormal(phi, phi_perp)
    check_memory(phi.grid.M, N)
    total = 0
    for slot in range(N):
        factors = [phi_perp.values if j == slot else phi.values for j in range(N)]
        term = factors[0]
        for f in factors[1:]:
            term = np.multiply.outer(term, f)
        total = total + term
    # the N terms are mutually orthogonal with unit norm
    return ManyBodyState(phi.grid, total / math.sqrt(N))


def _check_orthonormal(phi: WaveFunction, phi_perp: WaveFunction) -> None:
    for name, f in (("phi", phi), ("phi_perp", phi_perp)):
        if abs(l2_norm(f) - 1.0) > 1e-8:
            raise ValueError(f"{name} must be normalized, norm = {l2_norm(f)}")
    ov = abs(inner(phi, phi_perp))
    if ov > 1e-8:
        raise ValueError(f"phi and phi_perp are not orthogonal: |<phi, phi_perp>| = {ov:.3e}")


def manybody_potential(b: ScaledBump, mu: float, N: int, grid: Grid1D) -> np.ndarray:
    """``(mu / N) sum_{k<l} w_eps(x_k) w_eps(x_l)`` on the full tensor grid."""
    b.check_resolved(grid)
    check_memory(grid.M, N)
    w = b.on_grid(grid)
    total = np.zeros((1,) * N)
    squares = np.zeros((1,) * N)
    for j in range(N):
        shape = [1] * N
        shape[j] = grid.M
        wj = w.reshape(shape)
        total = total + wj
        squares = squares + wj**2
    return (mu / N) * 0.5 * (total**2 - squares)


def _kinetic_multiplier(grid: Grid1D, N: int, dt: float) -> np.ndarray:
    k2 = grid.k**2
    total = np.zeros((1,) * N)
    for j in range(N):
        shape = [1] * N
        shape[j] = grid.M
        total = total + k2.reshape(shape)
    return np.exp(-1j * total * dt)


class ManyBodyPropagator:
    """Strang splitting ``K(dt/2) V(dt) K(dt/2)`` with spectral kinetic factors."""

    def __init__(self, grid: Grid1D, N: int, b: ScaledBump, mu: float, dt: float):
        b.check_resolved(grid)
        check_time_step(dt, b, grid)
        check_memory(grid.M, N)
        self.grid = grid
        self.N = N
        self.dt = dt
        self.half_kinetic = _kinetic_multiplier(grid, N, 0.5 * dt)
        self.potential_phase = np.exp(-1j * dt * manybody_potential(b, mu, N, grid))

    def step(self, a: np.ndarray, n: int = 1) -> np.ndarray:
        if n <= 0:
            return a
        # merge adjacent half kinetic steps
        full = self.half_kinetic**2
        c = sfft.fftn(a)
        c *= self.half_kinetic
        for i in range(n):
            c = sfft.ifftn(c, overwrite_x=True)
            c *= self.potential_phase
            c = sfft.fftn(c, overwrite_x=True)
            c *= self.half_kinetic if i == n - 1 else full
        return sfft.ifftn(c, overwrite_x=True)


def evolve_manybody(psi: ManyBodyState, b: ScaledBump, mu: float, dt: float, T: float) -> ManyBodyState:
    prop = ManyBodyPropagator(psi.grid, psi.N, b, mu, dt)
    n = int(round(T / dt))
    return ManyBodyState(psi.grid, prop.step(psi.amplitudes, n))


def manybody_trajectory(psi: ManyBodyState, b: ScaledBump, mu: float, dt: float, sample_times):
    """Yield ``(t, state)`` at each requested time (rounded to the step grid)."""
    prop = ManyBodyPropagator(psi.grid, psi.N, b, mu, dt)
    a = psi.amplitudes
    done = 0
    for t in sorted(sample_times):
        n = int(round(t / dt))
        a = prop.step(a, n - done)
        done = n
        yield n * dt, ManyBodyState(psi.grid, a)


@dataclass(frozen=True, eq=False)
class ReducedDensity:
    """One-particle reduced density; ``matrix[i, j] = gamma(x_i, x_j)``."""

    grid: Grid1D
    matrix: np.ndarray

    @property
    def operator(self) -> np.ndarray:
        """Quadrature-weighted matrix ``h * gamma``; use this for spectra."""
        return self.grid.h * self.matrix

    def trace(self) -> float:
        return float(self.grid.h * np.real(np.trace(self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.operator)[::-1]

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    @classmethod
    def pure(cls, psi: WaveFunction) -> ReducedDensity:
        return cls(psi.grid, np.outer(psi.values, psi.values.conj()))

    @classmethod
    def defect(cls, phi: WaveFunction, phi_perp: WaveFunction, N: int) -> ReducedDensity:
        """Closed form for the symmetrized single-defect state, any ``N``:
        ``((N-1)/N) |phi><phi| + (1/N) |phi_perp><phi_perp|``."""
        _check_orthonormal(phi, phi_perp)
        m = ((N - 1) / N) * np.outer(phi.values, phi.values.conj())
        m = m + (1.0 / N) * np.outer(phi_perp.values, phi_perp.values.conj())
        return cls(phi.grid, m)

    def write_csv(self, path) -> None:
        lines = ["i,j,re,im"]
        M = self.grid.M
        for i in range(M):
            for j in range(M):
                z = self.matrix[i, j]
                lines.append(f"{i},{j},{z.real:.17g},{z.imag:.17g}")
        Path(path).write_text("\n".join(lines) + "\n")

    def write_eigenvalues_csv(self, path) -> None:
        lines = ["index,eigenvalue"] + [f"{i},{v:.17g}" for i, v in enumerate(self.eigenvalues())]
        Path(path).write_text("\n".join(lines) + "\n")


def reduced_density(psi: ManyBodyState) -> ReducedDensity:
    """``gamma(x, y) = h^(N-1) sum_Z Psi(x, Z) conj(Psi(y, Z))``."""
    M, N, h = psi.grid.M, psi.N, psi.grid.h
    a = psi.amplitudes.reshape(M, -1)
    return ReducedDensity(psi.grid, h ** (N - 1) * (a @ a.conj().T))


def trace_distance(gamma: ReducedDensity, psi: WaveFunction) -> float:
    """``Tr |gamma - |psi><psi||``."""
    if abs(l2_norm(psi) - 1.0) > 1e-8:
        raise ValueError(f"psi must be normalized, norm = {l2_norm(psi)}")
    diff = gamma.grid.h * (gamma.matrix - np.outer(psi.values, psi.values.conj()))
    return float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def pure_state_distance(u: WaveFunction, v: WaveFunction) -> float:
    """``Tr ||u><u| - |v><v||`` for normalized states, ``2 sqrt(1 - |<u, v>|^2)``."""
    return 2.0 * math.sqrt(max(0.0, 1.0 - abs(inner(u, v)) ** 2))


def factorized_energy_per_particle(phi: WaveFunction, b: ScaledBump, mu: float, N: int) -> float:
    """Per-particle energy of ``phi^(x)N``:
    ``||phi'||^2 / 2 + (mu / 4) ((N - 1) / N) <w_eps, |phi|^2>^2``.

    This is ``<Psi, H_N Psi> / (2N)``, the same half-normalization as the
    one-body energy functionals.
    """
    c = coupling(b, phi)
    return 0.5 * kinetic_norm_sq(phi) + 0.25 * mu * ((N - 1) / N) * c**2


def manybody_expectation(psi: ManyBodyState, b: ScaledBump, mu: float) -> float:
    """``<Psi, H_N Psi>`` by direct tensor contraction."""
    grid, N = psi.grid, psi.N
    hN = grid.h**N
    c = sfft.fftn(psi.amplitudes)
    k2 = grid.k**2
    kin = 0.0
    for j in range(N):
        shape = [1] * N
        shape[j] = grid.M
        kin += float(np.sum(k2.reshape(shape) * np.abs(c) ** 2))
    kin *= hN / grid.M**N
    V = manybody_potential(b, mu, N, grid)
    pot = hN * float(np.sum(V * np.abs(psi.amplitudes) ** 2))
    return kin + pot


def manybody_energy(psi: ManyBodyState, b: ScaledBump, mu: float) -> float:
    """N-body energy ``<Psi, H_N Psi> / 2``, normalized like the one-body functionals.

    For ``Psi = phi^(x)N`` this divided by ``N`` is
    :func:`factorized_energy_per_particle`.
    """
    return 0.5 * manybody_expectation(psi, b, mu)
