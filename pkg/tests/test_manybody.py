import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from impurity_nls.core import Grid1D, free_step, gaussian, inner, l2_norm
from impurity_nls.errors import GuardViolation
from impurity_nls.hartree import HartreeRun, evolve_hartree
from impurity_nls.manybody import (
    MAX_ENTRIES,
    ManyBodyPropagator,
    ManyBodyState,
    MemoryBudgetError,
    ReducedDensity,
    build_defect_state,
    build_factorized,
    check_memory,
    evolve_manybody,
    factorized_energy_per_particle,
    manybody_energy,
    manybody_expectation,
    manybody_potential,
    manybody_trajectory,
    pure_state_distance,
    reduced_density,
    trace_distance,
)
from impurity_nls.potentials import ScaledBump


def _unit(psi):
    return psi * (1.0 / l2_norm(psi))


@pytest.fixture(scope="module")
def perp(small_grid, small_phi):
    # x phi, Gram-Schmidt against phi (the node x = -L has no mirror partner)
    v = small_phi.with_values(small_phi.values * small_grid.x)
    v = v - small_phi * inner(small_phi, v)
    return _unit(v)


def test_memory_budget():
    assert MAX_ENTRIES == 2**27
    check_memory(32, 4)
    check_memory(2**27, 1)
    with pytest.raises(MemoryBudgetError, match="128"):
        check_memory(128, 4)
    assert issubclass(MemoryBudgetError, GuardViolation)


class TestStates:
    @pytest.mark.parametrize("N", [2, 3, 4])
    def test_factorized(self, small_phi, N):
        psi = build_factorized(small_phi, N)
        assert psi.N == N
        assert psi.norm() == pytest.approx(1.0, abs=1e-13)
        assert psi.symmetry_residual() < 1e-15

    def test_requires_unit_norm(self, small_grid):
        with pytest.raises(ValueError, match="normalized"):
            build_factorized(gaussian(small_grid, 0.5) * 2.0, 2)

    @pytest.mark.parametrize("N", [2, 3, 4])
    def test_defect_state(self, small_phi, perp, N):
        psi = build_defect_state(small_phi, perp, N)
        assert psi.norm() == pytest.approx(1.0, abs=1e-12)
        assert psi.symmetry_residual() < 1e-14
        fact = build_factorized(small_phi, N)
        assert abs(psi.overlap(fact)) < 1e-12

    def test_symmetry_residual_detects_asymmetry(self, small_phi, perp):
        a = np.multiply.outer(small_phi.values, perp.values)
        assert ManyBodyState(small_phi.grid, a).symmetry_residual() > 0.1


class TestReducedDensity:
    @pytest.mark.parametrize("N", [2, 3])
    def test_factorized_is_pure(self, small_phi, N):
        gamma = reduced_density(build_factorized(small_phi, N))
        assert gamma.trace() == pytest.approx(1.0, abs=1e-13)
        assert gamma.hermiticity_residual() < 1e-15
        assert trace_distance(gamma, small_phi) < 1e-13
        ev = gamma.eigenvalues()
        assert ev[0] == pytest.approx(1.0, abs=1e-13)
        assert np.all(np.abs(ev[1:]) < 1e-13)

    @pytest.mark.parametrize("N", [2, 3, 4])
    def test_defect_tensor_matches_closed_form(self, small_phi, perp, N):
        tensor = reduced_density(build_defect_state(small_phi, perp, N))
        closed = ReducedDensity.defect(small_phi, perp, N)
        assert np.max(np.abs(tensor.matrix - closed.matrix)) < 1e-12
        assert trace_distance(tensor, small_phi) == pytest.approx(2.0 / N, abs=1e-9)

    @pytest.mark.parametrize("N", [2, 5, 10, 1000])
    def test_defect_trace_distance(self, small_phi, perp, N):
        assert trace_distance(ReducedDensity.defect(small_phi, perp, N), small_phi) == pytest.approx(2.0 / N, abs=1e-9)

    def test_trace_distance_needs_unit_state(self, small_phi):
        gamma = ReducedDensity.pure(small_phi)
        with pytest.raises(ValueError):
            trace_distance(gamma, small_phi * 1.1)

    def test_pure_state_distance_formula(self, small_phi):
        v = free_step(small_phi, 0.2)
        assert trace_distance(ReducedDensity.pure(v), small_phi) == pytest.approx(pure_state_distance(v, small_phi), abs=1e-12)

    def test_csv_outputs(self, tmp_path, small_phi, perp):
        gamma = ReducedDensity.defect(small_phi, perp, 3)
        gamma.write_csv(tmp_path / "g.csv")
        gamma.write_eigenvalues_csv(tmp_path / "e.csv")
        lines = (tmp_path / "g.csv").read_text().splitlines()
        assert lines[0] == "i,j,re,im" and len(lines) == 1 + 32 * 32
        ev = [float(r.split(",")[1]) for r in (tmp_path / "e.csv").read_text().splitlines()[1:]]
        assert ev[0] == pytest.approx(2 / 3, abs=1e-12)
        assert ev[1] == pytest.approx(1 / 3, abs=1e-12)


class TestDynamics:
    def test_potential_pairs(self, small_grid):
        b = ScaledBump(0.5)
        V = manybody_potential(b, 3.0, 3, small_grid)
        w = b.on_grid(small_grid)
        i, j, k = 16, 10, 20
        assert V[i, j, k] == pytest.approx((3.0 / 3) * (w[i] * w[j] + w[i] * w[k] + w[j] * w[k]))

    def test_free_limit_stays_factorized(self, small_phi):
        psi = evolve_manybody(build_factorized(small_phi, 3), ScaledBump(0.5), 0.0, 5e-3, 0.5)
        want = build_factorized(free_step(small_phi, 0.5), 3)
        assert np.max(np.abs(psi.amplitudes - want.amplitudes)) < 1e-12

    def test_unitary_and_symmetric(self, small_phi):
        psi = evolve_manybody(build_factorized(small_phi, 3), ScaledBump(0.5), 4.0, 5e-3, 0.5)
        assert psi.norm() == pytest.approx(1.0, abs=1e-12)
        assert psi.symmetry_residual() < 1e-13

    def test_energy_conserved(self, small_phi):
        b = ScaledBump(0.5)
        psi0 = build_factorized(small_phi, 2)
        e0 = manybody_expectation(psi0, b, 2.0)
        e1 = manybody_expectation(evolve_manybody(psi0, b, 2.0, 1e-3, 0.5), b, 2.0)
        assert abs(e1 - e0) / e0 < 1e-5

    def test_against_dense_expm(self):
        g = Grid1D(1.0, 16)
        phi = _unit(gaussian(g, 0.25))
        b = ScaledBump(0.5)
        psi = evolve_manybody(build_factorized(phi, 2), b, 1.0, 1e-3, 0.1)
        U = oracles.dense_two_body_propagator(1.0, 16, b.on_grid(g), 1.0, 0.1)
        ref = (U @ build_factorized(phi, 2).amplitudes.ravel()).reshape(16, 16)
        assert np.max(np.abs(psi.amplitudes - ref)) < 1e-5

    def test_trajectory_matches_single_runs(self, small_phi):
        b = ScaledBump(0.5)
        psi0 = build_factorized(small_phi, 2)
        snaps = list(manybody_trajectory(psi0, b, 1.0, 5e-3, [0.5, 0.0, 0.25]))
        assert [t for t, _ in snaps] == pytest.approx([0.0, 0.25, 0.5])
        direct = evolve_manybody(psi0, b, 1.0, 5e-3, 0.5)
        assert np.max(np.abs(snaps[-1][1].amplitudes - direct.amplitudes)) < 1e-13

    def test_propagator_guards(self, small_grid):
        with pytest.raises(GuardViolation):
            ManyBodyPropagator(small_grid, 2, ScaledBump(0.3), 1.0, 1e-3)
        with pytest.raises(GuardViolation):
            ManyBodyPropagator(small_grid, 2, ScaledBump(0.5), 1.0, 0.1)
        with pytest.raises(MemoryBudgetError):
            ManyBodyPropagator(Grid1D(2.0, 128), 4, ScaledBump(0.5), 1.0, 1e-3)

    def test_close_to_hartree_at_short_times(self, small_phi):
        b = ScaledBump(0.5)
        psi = evolve_manybody(build_factorized(small_phi, 3), b, 1.0, 5e-3, 0.1)
        u = evolve_hartree(HartreeRun(small_phi, b, dt=5e-3, T=0.1)).final
        u = _unit(u)
        assert trace_distance(reduced_density(psi), u) < 0.02


class TestEnergyIdentity:
    @pytest.mark.parametrize("N", [2, 3])
    def test_closed_form_matches_contraction(self, small_phi, N):
        b = ScaledBump(0.5)
        psi = build_factorized(small_phi, N)
        direct = manybody_energy(psi, b, 1.0) / N
        assert factorized_energy_per_particle(small_phi, b, 1.0, N) == pytest.approx(direct, abs=1e-12)

    def test_kinetic_part_alone(self, small_phi):
        b = ScaledBump(0.5)
        psi = build_factorized(small_phi, 2)
        # with mu = 0 only the kinetic term remains: <Psi, H Psi> = N ||phi'||^2
        from impurity_nls.core import kinetic_norm_sq

        assert manybody_expectation(psi, b, 0.0) == pytest.approx(2 * kinetic_norm_sq(small_phi), rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(mu=st.floats(0.0, 10.0), x0=st.floats(-0.5, 0.5), k0=st.floats(-3.0, 3.0))
def test_norm_and_symmetry_property(mu, x0, k0):
    g = Grid1D(2.0, 32)
    phi = _unit(gaussian(g, 0.5, x0=x0, k0=k0))
    psi = evolve_manybody(build_factorized(phi, 2), ScaledBump(0.5), mu, 5e-3, 0.1)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert psi.symmetry_residual() < 1e-13
    gamma = reduced_density(psi)
    assert gamma.trace() == pytest.approx(1.0, abs=1e-12)
    assert np.all(gamma.eigenvalues() > -1e-12)
    assert math.isfinite(trace_distance(gamma, phi))
