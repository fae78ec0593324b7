"""Strang splitting for the concentrated Hartree equation

    i du/dt = -u'' + mu w_eps <w_eps, |u|^2> u.

The nonlinear substep is solved exactly: multiplying ``u`` by a real-argument
phase leaves ``|u|`` and hence the coupling ``<w_eps, |u|^2>`` unchanged, so
the flow over time ``tau`` is ``u * exp(-i mu c w_eps tau)`` with ``c`` frozen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Grid1D, WaveFunction, kinetic_norm_sq, l2_norm
from .errors import GuardViolation
from .potentials import ScaledBump, coupling, coupling_values


class TimeStepTooLargeError(GuardViolation):
    """``dt`` exceeds the stiffness heuristic ``dt <= eps * h``."""


def check_time_step(dt: float, b: ScaledBump, grid: Grid1D) -> None:
    limit = b.epsilon * grid.h
    if abs(dt) > limit:
        raise TimeStepTooLargeError(
            f"|dt|={abs(dt)} exceeds eps*h={limit} (eps={b.epsilon}, h={grid.h})"
        )


def nonlinear_substep(u: WaveFunction, b: ScaledBump, mu: float, tau: float) -> WaveFunction:
    c = coupling(b, u)
    return u.with_values(u.values * np.exp(-1j * mu * c * tau * b.on_grid(u.grid)))


def hartree_step(u: WaveFunction, b: ScaledBump, mu: float, dt: float) -> WaveFunction:
    b.check_resolved(u.grid)
    stepper = _Stepper(u.grid, b, mu, dt)
    return u.with_values(stepper.step(np.array(u.values)))


class _Stepper:
    """Precomputed factors for repeated Strang steps on raw arrays."""

    def __init__(self, grid: Grid1D, b: ScaledBump, mu: float, dt: float):
        self.grid = grid
        self.w = b.on_grid(grid)
        self.mu = mu
        self.dt = dt
        self.half_kinetic = np.exp(-0.5j * grid.k**2 * dt)
        self.last_coupling = math.nan

    def step(self, v: np.ndarray) -> np.ndarray:
        v = np.fft.ifft(self.half_kinetic * np.fft.fft(v))
        c = coupling_values(self.w, v, self.grid.h)
        self.last_coupling = c
        if self.mu != 0:
            v = v * np.exp(-1j * self.mu * c * self.dt * self.w)
        return np.fft.ifft(self.half_kinetic * np.fft.fft(v))


def energy_hartree(u: WaveFunction, b: ScaledBump, mu: float) -> float:
    """``||u'||^2 / 2 + mu <w_eps, |u|^2>^2 / 4``."""
    return 0.5 * kinetic_norm_sq(u) + 0.25 * mu * coupling(b, u) ** 2


@dataclass(frozen=True)
class HartreeRun:
    phi: WaveFunction
    bump: ScaledBump
    mu: float = 1.0
    dt: float = 1e-3
    T: float = 1.0
    stride: int = 100

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T >= 0:
            raise ValueError(f"T must be nonnegative, got {self.T}")
        if not self.mu >= 0:
            raise ValueError(f"mu must be nonnegative (defocusing), got {self.mu}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class HartreeTrajectory:
    times: list[float] = field(default_factory=list)
    states: list[WaveFunction] = field(default_factory=list)
    #: coupling <w_eps, |u|^2> at every step (index 0 is the initial datum)
    step_times: np.ndarray | None = None
    couplings: np.ndarray | None = None

    @property
    def final(self) -> WaveFunction:
        return self.states[-1]

    def __iter__(self):
        return iter(zip(self.times, self.states))

    def __len__(self) -> int:
        return len(self.states)


def evolve_hartree(run: HartreeRun, *, reverse: bool = False) -> HartreeTrajectory:
    """Integrate to ``T``; snapshots every ``stride`` steps plus the final state.

    ``reverse=True`` integrates backwards in time with step ``-dt``.
    """
    grid = run.phi.grid
    run.bump.check_resolved(grid)
    check_time_step(run.dt, run.bump, grid)
    dt = -run.dt if reverse else run.dt
    stepper = _Stepper(grid, run.bump, run.mu, dt)
    n = run.n_steps

    traj = HartreeTrajectory()
    couplings = np.empty(n + 1)
    couplings[0] = coupling(run.bump, run.phi)
    v = np.array(run.phi.values)
    traj.times.append(0.0)
    traj.states.append(run.phi)
    for i in range(1, n + 1):
        v = stepper.step(v)
        couplings[i] = coupling_values(stepper.w, v, grid.h)
        if i % run.stride == 0 or i == n:
            traj.times.append(i * dt)
            traj.states.append(WaveFunction(grid, v))
    traj.step_times = dt * np.arange(n + 1)
    traj.couplings = couplings
    return traj


def conserved_series(traj: HartreeTrajectory, b: ScaledBump, mu: float) -> list[tuple]:
    """Rows ``(t, l2, energy, coupling)`` for every snapshot."""
    return [(t, l2_norm(u), energy_hartree(u, b, mu), coupling(b, u)) for t, u in traj]


def hartree_at_times(phi: WaveFunction, b: ScaledBump, mu: float, dt: float, times) -> list[WaveFunction]:
    """States at the given times, each an integer multiple of ``dt``."""
    grid = phi.grid
    b.check_resolved(grid)
    check_time_step(dt, b, grid)
    steps = [int(round(t / dt)) for t in times]
    for t, n in zip(times, steps):
        if abs(n * dt - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"sample time {t} is not a multiple of dt={dt}")
    stepper = _Stepper(grid, b, mu, dt)
    wanted = sorted(set(steps))
    out = {}
    v = np.array(phi.values)
    done = 0
    for n in wanted:
        for _ in range(n - done):
            v = stepper.step(v)
        done = n
        out[n] = WaveFunction(grid, v)
    return [out[n] for n in steps]
