"""Quick sanity checks with exact answers, one or two per module."""

from __future__ import annotations

import math

import numpy as np

from . import delta
from .core import Grid1D, WaveFunction, free_gaussian, free_step, gaussian, l2_norm
from .experiments import fit_rate
from .hartree import HartreeRun, evolve_hartree
from .manybody import (
    ReducedDensity,
    build_defect_state,
    build_factorized,
    evolve_manybody,
    reduced_density,
    trace_distance,
)
from .potentials import ScaledBump, coupling


def _free_gaussian():
    grid = Grid1D(20.0, 1024)
    out = free_step(gaussian(grid), 0.5)
    return float(np.max(np.abs(out.values - free_gaussian(grid.x, 0.5)))), 1e-10


def _zero_step():
    psi = gaussian(Grid1D(20.0, 256))
    return float(np.max(np.abs(free_step(psi, 0.0).values - psi.values))), 0.0


def _bump_mass():
    grid = Grid1D(20.0, 1024)
    b = ScaledBump(0.5)
    ones = WaveFunction(grid, np.ones(grid.M))
    return abs(coupling(b, ones) - 1.0), 1e-12


def _hartree_free():
    grid = Grid1D(20.0, 1024)
    phi = gaussian(grid)
    traj = evolve_hartree(HartreeRun(phi, ScaledBump(0.5), mu=0.0, dt=1e-3, T=0.1))
    return float(np.max(np.abs(traj.final.values - free_step(phi, 0.1).values))), 1e-8


def _charge_free():
    grid = Grid1D(20.0, 1024)
    phi = gaussian(grid)
    traj = delta.solve_charge(phi, 0.0, 1e-2, 10)
    exact = free_gaussian(0.0, 0.1)
    return abs(traj.q[-1] - exact), 1e-10


def _charge_start():
    phi = gaussian(Grid1D(20.0, 1024))
    return abs(delta.free_at_origin(phi, 0.0) - phi.at_origin), 1e-12


def _manybody_free():
    grid = Grid1D(1.0, 16)
    phi = gaussian(grid, 0.25)
    phi = phi * (1.0 / l2_norm(phi))
    psi = evolve_manybody(build_factorized(phi, 2), ScaledBump(0.5), 0.0, 1e-2, 0.1)
    return trace_distance(reduced_density(psi), free_step(phi, 0.1)), 1e-8


def _defect_distance():
    grid = Grid1D(4.0, 32)
    phi = gaussian(grid, 0.5)
    phi = phi * (1.0 / l2_norm(phi))
    perp = phi.with_values(phi.values * grid.x)
    perp = perp * (1.0 / l2_norm(perp))
    tensor = trace_distance(reduced_density(build_defect_state(phi, perp, 2)), phi)
    closed = trace_distance(ReducedDensity.defect(phi, perp, 10), phi)
    return max(abs(tensor - 1.0), abs(closed - 0.2)), 1e-9


def _fit_identity():
    xs = np.array([0.5, 1.0, 2.0, 4.0])
    return abs(fit_rate(xs, xs).slope - 1.0), 1e-12


CHECKS = [
    ("core: free flow of a Gaussian matches the closed form", _free_gaussian),
    ("core: zero time step is the identity", _zero_step),
    ("potentials: w_eps has unit mass", _bump_mass),
    ("hartree: mu = 0 reduces to free flow", _hartree_free),
    ("delta: mu = 0 charge equals free value at origin", _charge_free),
    ("delta: charge starts at phi(0)", _charge_start),
    ("manybody: mu = 0 keeps exact factorization", _manybody_free),
    ("manybody: single-defect trace distance is 2/N", _defect_distance),
    ("experiments: rate fit of y = x has slope 1", _fit_identity),
]


def run(echo=print) -> bool:
    ok_all = True
    for name, check in CHECKS:
        err, tol = check()
        ok = math.isfinite(err) and err <= tol
        ok_all &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name}  (err={err:.2e}, tol={tol:.0e})")
    return ok_all
