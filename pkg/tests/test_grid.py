import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pevolab.errors import DomainError, InvalidInputError, ParameterError
from pevolab.grid import (BoundaryMassWarning, Field, Grid1D, Spectrum, boundary_mass, bracket,
                          check_boundary_mass, dft, fourier_multiplier, idft, japanese, read_snapshot,
                          write_snapshot)
from pevolab.data import gaussian, random_band_limited


def random_field(grid, rng):
    return Field(grid, rng.normal(size=grid.N) + 1j * rng.normal(size=grid.N))


def test_grid_layout():
    g = Grid1D(40.0, 512)
    assert g.dx == pytest.approx(80 / 512)
    assert g.x[0] == -40.0 and g.x[-1] == pytest.approx(40 - g.dx)
    assert g.k[: 3].tolist() == [0, 1, 2]
    assert g.k[g.nyquist] == -256
    assert g.xi[g.nyquist] == pytest.approx(-np.pi / 40 * 256)


@pytest.mark.parametrize("N", [15, 17, 8, 0])
def test_grid_rejects_bad_N(N):
    with pytest.raises(InvalidInputError, match="grid.N must be even"):
        Grid1D(10.0, N)


def test_field_validation(small_grid):
    with pytest.raises(InvalidInputError):
        Field(small_grid, np.zeros(small_grid.N + 1))
    bad = np.zeros(small_grid.N)
    bad[3] = np.nan
    with pytest.raises(InvalidInputError):
        Field(small_grid, bad)
    with pytest.raises(InvalidInputError):
        Spectrum(small_grid, np.zeros(3))


def test_delta_has_flat_spectrum(small_grid):
    u = np.zeros(small_grid.N)
    u[0] = 1.0
    s = dft(Field(small_grid, u)).values
    np.testing.assert_allclose(np.abs(s), 1.0 / small_grid.N, rtol=1e-13)


def test_round_trip(grid, rng):
    u = random_field(grid, rng)
    assert np.max(np.abs(idft(dft(u)).values - u.values)) <= 1e-12


def test_pure_mode_has_unit_coefficient(grid):
    k = 5
    u = Field(grid, np.exp(1j * grid.xi[k] * grid.x))
    s = dft(u).values
    assert s[k] == pytest.approx(1.0, abs=1e-13)
    assert np.max(np.abs(np.delete(s, k))) < 1e-13


def test_parseval(grid, rng):
    u = random_field(grid, rng)
    lhs = np.sum(np.abs(u.values) ** 2) * grid.dx
    rhs = 2 * grid.L * np.sum(np.abs(dft(u).values) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_identity_and_derivative_multipliers(grid, rng):
    u = random_field(grid, rng)
    np.testing.assert_allclose(fourier_multiplier(u, lambda xi: np.ones_like(xi)).values, u.values, atol=1e-12)
    k = 5
    mode = Field(grid, np.exp(1j * grid.xi[k] * grid.x))
    out = fourier_multiplier(mode, lambda xi: 1j * xi)
    np.testing.assert_allclose(out.values, 1j * grid.xi[k] * mode.values, atol=1e-11)


def test_multiplier_matches_dense_sum(grid, rng):
    u = random_band_limited(grid, rng)
    m = lambda xi: (1 + xi ** 2) ** 0.25
    got = fourier_multiplier(u, m).values
    uhat = grid.fft(u.values)
    mv = m(grid.xi)
    mv[grid.nyquist] = 0.5 * (m(grid.xi[grid.nyquist]) + m(-grid.xi[grid.nyquist]))
    dense = np.exp(1j * np.outer(grid.x, grid.xi)) @ (mv * uhat)
    assert np.max(np.abs(got - dense)) <= 1e-10 * np.max(np.abs(dense))


def test_multiplier_linearity_and_composition(grid, rng):
    u, w = random_field(grid, rng), random_field(grid, rng)
    m1 = lambda xi: np.exp(-0.1 * xi ** 2) + 1j * xi
    m2 = lambda xi: (1 + xi ** 2) ** -0.5
    a, b = 2.0 - 1j, 0.5
    lhs = fourier_multiplier(a * u + b * w, m1).values
    rhs = a * fourier_multiplier(u, m1).values + b * fourier_multiplier(w, m1).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))
    two = fourier_multiplier(fourier_multiplier(u, m1), m2).values
    one = fourier_multiplier(u, lambda xi: m1(xi) * m2(xi)).values
    assert np.max(np.abs(two - one)) <= 1e-12 * np.max(np.abs(one))


def test_nyquist_keeps_real_data_real(grid, rng):
    u = Field(grid, rng.normal(size=grid.N))
    out = fourier_multiplier(u, lambda xi: (1j * xi) ** 3)
    assert np.max(np.abs(out.values.imag)) < 1e-10


def test_nonfinite_multiplier_names_frequency(grid):
    u = Field.zeros(grid)
    with pytest.raises(DomainError, match="xi = 0"):
        with np.errstate(divide="ignore"):
            fourier_multiplier(u, lambda xi: 1.0 / xi)


def test_bracket_values():
    assert bracket(0, 1) == 1.0
    assert bracket(3, 4) == 5.0
    v = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(bracket(v, 1), japanese(v))
    with pytest.raises(ParameterError):
        bracket(1.0, 0.5)


@given(st.floats(-1e3, 1e3), st.floats(1, 100))
def test_bracket_even_and_monotone(v, h):
    assert bracket(v, h) == bracket(-v, h)
    assert bracket(abs(v) + 1, h) > bracket(v, h)
    assert bracket(v, h + 1) > bracket(v, h)


def test_boundary_mass_warning(grid):
    centered = gaussian(grid)
    assert boundary_mass(centered) < 1e-8
    edge = gaussian(grid, center=-38.0)
    with pytest.warns(BoundaryMassWarning):
        check_boundary_mass(edge)


def test_snapshot_round_trip(tmp_path, grid, rng):
    u = random_field(grid, rng)
    write_snapshot(tmp_path / "u.pevo", u, t=0.125)
    head = (tmp_path / "u.pevo").read_text().splitlines()[0]
    assert head == "PEVO1 256 40 0.125"
    v, t = read_snapshot(tmp_path / "u.pevo")
    assert t == 0.125 and v.grid == grid
    np.testing.assert_allclose(v.values, u.values, rtol=1e-16, atol=1e-16)
    (tmp_path / "bad.pevo").write_text("PEVO0 1 2 3\n")
    with pytest.raises(InvalidInputError):
        read_snapshot(tmp_path / "bad.pevo")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_round_trip_property(seed):
    g = Grid1D(10.0, 32)
    u = random_field(g, np.random.default_rng(seed))
    assert np.max(np.abs(idft(dft(u)).values - u.values)) <= 1e-12 * max(1.0, np.max(np.abs(u.values)))
