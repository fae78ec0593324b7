import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from impurity_nls.core import (
    Grid1D,
    GridMismatchError,
    NonFiniteStateError,
    SingularTimeError,
    WaveFunction,
    derivative,
    energy_delta,
    free_kernel,
    free_step,
    gaussian,
    h1_norm,
    inner,
    kinetic_norm_sq,
    l2_norm,
    read_state_csv,
    write_state_csv,
)
from impurity_nls.errors import NumericalFailure


class TestGrid:
    def test_origin_is_exact_node(self):
        g = Grid1D(20.0, 1024)
        assert g.x[g.origin] == 0.0
        assert g.x[0] == -20.0
        assert g.h == pytest.approx(40 / 1024)

    @pytest.mark.parametrize("M", [0, 1, 3, 100, 1000])
    def test_rejects_non_power_of_two(self, M):
        with pytest.raises(ValueError, match="power of two"):
            Grid1D(1.0, M)

    @pytest.mark.parametrize("L", [0.0, -1.0, math.inf, math.nan])
    def test_rejects_bad_half_width(self, L):
        with pytest.raises(ValueError):
            Grid1D(L, 16)

    def test_wavenumbers(self):
        g = Grid1D(math.pi, 8)
        assert np.allclose(g.k, [0, 1, 2, 3, -4, -3, -2, -1])

    def test_arrays_are_read_only(self):
        g = Grid1D(1.0, 8)
        with pytest.raises(ValueError):
            g.x[0] = 1.0

    def test_equality_and_hash(self):
        assert Grid1D(1.0, 8) == Grid1D(1.0, 8)
        assert hash(Grid1D(1.0, 8)) == hash(Grid1D(1.0, 8))
        assert Grid1D(1.0, 8) != Grid1D(2.0, 8)


class TestWaveFunction:
    def test_rejects_non_finite(self):
        g = Grid1D(1.0, 8)
        vals = np.zeros(8, complex)
        vals[3] = np.nan
        with pytest.raises(NonFiniteStateError):
            WaveFunction(g, vals)
        with pytest.raises(NumericalFailure):
            WaveFunction(g, vals)

    def test_grid_mismatch(self):
        a = WaveFunction.zeros(Grid1D(1.0, 8))
        b = WaveFunction.zeros(Grid1D(2.0, 8))
        with pytest.raises(GridMismatchError):
            inner(a, b)
        with pytest.raises(GridMismatchError):
            a + b

    def test_values_are_copied(self):
        g = Grid1D(1.0, 8)
        raw = np.ones(8, complex)
        psi = WaveFunction(g, raw)
        raw[0] = 5
        assert psi.values[0] == 1


def test_gaussian_norm_and_origin(std_grid, std_phi):
    assert l2_norm(std_phi) == pytest.approx(1.0, abs=1e-12)
    assert std_phi.at_origin == pytest.approx((2 * math.pi) ** -0.25)


def test_kinetic_of_gaussian(std_phi):
    # ||phi'||^2 = 1 / (4 sigma^2)
    assert kinetic_norm_sq(std_phi) == pytest.approx(0.25, abs=1e-12)
    d = derivative(std_phi)
    assert std_phi.grid.h * np.sum(np.abs(d) ** 2) == pytest.approx(0.25, abs=1e-12)
    assert h1_norm(std_phi) == pytest.approx(math.sqrt(1.25), abs=1e-12)


def test_energy_delta_closed_form(std_phi):
    assert energy_delta(std_phi, 1.0) == pytest.approx(oracles.gaussian_delta_energy(), abs=1e-12)
    assert energy_delta(std_phi, 1.0) == pytest.approx(oracles.FROZEN["standard_energy_delta_t0"], rel=1e-13)


# by t = 2 the periodic images of the spreading Gaussian reach 1e-9
@pytest.mark.parametrize("t,tol", [(0.1, 1e-13), (0.5, 1e-13), (1.0, 1e-12), (2.0, 1e-8)])
def test_free_flow_matches_closed_form(std_grid, std_phi, t, tol):
    out = free_step(std_phi, t)
    assert np.max(np.abs(out.values - oracles.free_gaussian(std_grid.x, t))) < tol


def test_free_step_zero_is_identity(std_phi):
    assert np.array_equal(free_step(std_phi, 0.0).values, std_phi.values)


def test_free_step_rejects_nan(std_phi):
    with pytest.raises(ValueError):
        free_step(std_phi, math.nan)


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(-2, 2, allow_nan=False),
    b=st.floats(-2, 2, allow_nan=False),
    k0=st.floats(-3, 3, allow_nan=False),
)
def test_free_flow_group_and_unitarity(a, b, k0):
    g = Grid1D(10.0, 256)
    psi = gaussian(g, 0.7, x0=1.0, k0=k0)
    two = free_step(free_step(psi, a), b)
    one = free_step(psi, a + b)
    assert np.max(np.abs(two.values - one.values)) < 1e-11
    assert l2_norm(two) == pytest.approx(l2_norm(psi), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(t=st.floats(0.05, 3.0))
def test_free_kernel_matches_closed_form(t):
    # the kernel convolved with the datum reproduces the closed-form free flow at x = 0.7
    g = Grid1D(40.0, 1 << 15)
    y = g.x
    phi0 = oracles.free_gaussian(y, 0.0)
    val = g.h * np.sum(free_kernel(t, 0.7 - y) * phi0)
    assert abs(val - oracles.free_gaussian(0.7, t)) < 1e-8


def test_free_kernel_branch_and_singularity():
    # principal branch: U(t, 0) = (4 pi i t)^(-1/2) has argument -pi/4
    assert np.angle(free_kernel(1.0, 0.0)) == pytest.approx(-math.pi / 4)
    with pytest.raises(SingularTimeError):
        free_kernel(0.0, 1.0)


def test_state_csv_roundtrip(tmp_path, std_phi):
    path = tmp_path / "s.csv"
    write_state_csv(path, free_step(std_phi, 0.3), 0.3)
    psi, t = read_state_csv(path)
    assert t == 0.3
    assert psi.grid == std_phi.grid
    assert np.array_equal(psi.values, free_step(std_phi, 0.3).values)
    header, first = path.read_text().splitlines()[:2]
    assert header.startswith("# L=")
    assert first == "x,re,im"
