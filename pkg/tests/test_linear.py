import warnings

import numpy as np
import pytest

from pevolab.data import forcing_suite, gaussian
from pevolab.errors import BlowUpError, ParameterError, PreconditionError, StabilityError
from pevolab.grid import BoundaryMassWarning, Field, Grid1D
from pevolab.linear import (PRESETS, check_hypotheses, exact_constant_solution, preset_coefficients, propagator,
                            rhs_apply, solve_linear, step_ifrk4, write_trajectory)
from pevolab.quantize import operator_matrix
from pevolab.sobolev import weighted_norm
from pevolab.symbols import SGSymbol


def l2(u):
    return weighted_norm(u if isinstance(u, Field) else Field(u.grid, u))


def rel_err(a: Field, b: Field) -> float:
    return l2(a - b) / l2(b)


@pytest.fixture(autouse=True)
def _quiet_boundary():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryMassWarning)
        yield


@pytest.mark.parametrize("name", ["const", "decay3", "kawahara5"])
def test_compliant_presets_pass(grid, name):
    report = check_hypotheses(preset_coefficients(name), grid)
    assert report.passed, str(report)
    assert str(report).endswith("all PASS")


def test_illposed_preset_fails_with_witness(grid):
    report = check_hypotheses(preset_coefficients("illposed3"), grid)
    assert not report.passed
    bad = [r for r in report.conditions if not r.passed]
    assert any("a_2" in r.name for r in bad)
    # a constant imaginary a_2 is worst at the box edge
    assert max(abs(r.witness_x) for r in bad) > 0.9 * grid.L


def test_decay3_constant_matches_gamma(grid):
    report = check_hypotheses(preset_coefficients("decay3", gamma=0.7), grid)
    top = next(r for r in report.conditions if r.name.startswith("|Im a_2|"))
    assert top.constant == pytest.approx(0.7, rel=1e-12)


def test_unknown_preset():
    with pytest.raises(ParameterError, match="unknown"):
        preset_coefficients("airy")
    assert set(PRESETS) == {"const", "decay3", "kawahara5", "illposed3"}


def test_rhs_plane_wave(grid):
    c = preset_coefficients("const", ap=2.0)
    k = 5
    xi = 2 * np.pi * k / (2 * grid.L)
    u = Field(grid, np.exp(1j * xi * grid.x))
    out = rhs_apply(c, 0.0, u)
    np.testing.assert_allclose(out.values, -2j * xi ** 3 * u.values, atol=1e-10)


def test_rhs_zero_state_returns_forcing(grid):
    c = preset_coefficients("decay3")
    f = gaussian(grid, center=3.0).values
    out = rhs_apply(c, 0.2, Field.zeros(grid), f)
    np.testing.assert_allclose(out.values, 1j * f, atol=1e-14)


def test_rhs_matches_dense_quantization(small_grid):
    c = preset_coefficients("decay3")
    levels = sorted(c.lower)

    def full_symbol(x, xi):
        s = xi ** 3 + 0j
        for j in levels:
            s = s + c.a(j, 0.0, x) * xi ** j
        return s

    A = operator_matrix(SGSymbol(full_symbol, (3, 0)), small_grid)
    u = gaussian(small_grid, width=2.0, xi0=1.0)
    expected = -1j * (A.matrix @ u.values)
    np.testing.assert_allclose(rhs_apply(c, 0.0, u).values, expected, atol=1e-9 * np.max(np.abs(expected)))


def test_zero_step_is_identity(grid):
    u = gaussian(grid)
    assert np.array_equal(step_ifrk4(u, 0.3, 0.0, preset_coefficients("decay3")).values, u.values)
    with pytest.raises(ParameterError):
        step_ifrk4(u, 0.0, -1e-3, preset_coefficients("decay3"))


def test_constant_step_exact(grid):
    c = preset_coefficients("const", ap=1.5)
    u = gaussian(grid, xi0=2.0)
    got = step_ifrk4(u, 0.0, 1e-2, c)
    assert rel_err(got, exact_constant_solution(c, u, 1e-2)) < 1e-12


def test_stability_bound_enforced(grid):
    with pytest.raises(StabilityError):
        step_ifrk4(gaussian(grid), 0.0, 0.5, preset_coefficients("decay3"))
    with pytest.raises(StabilityError):
        solve_linear(preset_coefficients("decay3"), gaussian(grid), T=1.0, dt=0.5)


def test_fourth_order_convergence(grid):
    c = preset_coefficients("decay3")
    g = gaussian(grid, center=1.0)
    T = 0.1
    ref = solve_linear(c, g, T=T, dt=T / 1280).final
    e1 = rel_err(solve_linear(c, g, T=T, dt=T / 80).final, ref)
    e2 = rel_err(solve_linear(c, g, T=T, dt=T / 160).final, ref)
    slope = np.log2(e1 / e2)
    assert 3.7 < slope < 4.4


def test_constant_solution_matches_closed_form(grid):
    c = preset_coefficients("const", ap=1.0)
    g = gaussian(grid, xi0=1.0)
    traj = solve_linear(c, g, T=0.2, dt=1e-3)
    assert rel_err(traj.final, exact_constant_solution(c, g, 0.2)) < 1e-10


def test_zero_data_gives_zero(grid):
    traj = solve_linear(preset_coefficients("decay3"), Field.zeros(grid), T=0.05, dt=1e-3)
    assert np.all(traj.values == 0)
    assert len(traj) == 51


def test_illposed_refused_then_grows(grid):
    c = preset_coefficients("illposed3")
    g = gaussian(grid, xi0=4.0, width=2.0)
    with pytest.raises(PreconditionError, match="allow_illposed"):
        solve_linear(c, g, T=0.1, dt=1e-3)
    traj = solve_linear(c, g, T=0.1, dt=1e-3, allow_illposed=True)
    assert l2(traj.final) > 1.5 * l2(g)


def test_illposed_blowup_guard(grid):
    c = preset_coefficients("illposed3")
    g = gaussian(grid, xi0=9.0, width=3.0)
    with pytest.raises(BlowUpError):
        solve_linear(c, g, T=1.0, dt=2e-3, allow_illposed=True)


def test_propagator_identity_and_semigroup(grid):
    c = preset_coefficients("decay3")
    h = gaussian(grid, center=-2.0)
    assert np.array_equal(propagator(c, 0.3, 0.3, h).values, h.values)
    direct = propagator(c, 0.0, 0.1, h, dt=5e-4)
    two = propagator(c, 0.05, 0.1, propagator(c, 0.0, 0.05, h, dt=5e-4), dt=5e-4)
    assert rel_err(two, direct) < 1e-8
    with pytest.raises(ParameterError):
        propagator(c, 0.2, 0.1, h)


def test_propagator_exact_for_constant(grid):
    c = preset_coefficients("const", ap=0.8)
    h = gaussian(grid, xi0=1.5)
    assert rel_err(propagator(c, 0.0, 0.15, h), exact_constant_solution(c, h, 0.15)) < 1e-10


def test_real_constant_coefficients_conserve_mass(grid):
    c = preset_coefficients("kawahara5")
    g = gaussian(grid, width=1.5)
    traj = solve_linear(c, g, T=0.048, dt=4e-4)
    norms = np.array([l2(traj.field(k)) for k in range(len(traj))])
    assert np.max(np.abs(norms / l2(g) - 1)) < 1e-8


def test_duhamel_consistency(grid):
    c = preset_coefficients("decay3")
    f = forcing_suite(grid, 3, 1)[0]
    T = 0.1
    g = Field.zeros(grid)
    u = solve_linear(c, g, f, T=T, dt=5e-4).final

    def duhamel(n):
        taus = np.linspace(0.0, T, n + 1)
        w = np.full(n + 1, T / n)
        w[[0, -1]] *= 0.5
        acc = np.zeros(grid.N, dtype=complex)
        for tau, wk in zip(taus, w):
            acc += wk * propagator(c, tau, T, Field(grid, f(tau)), dt=5e-4).values
        return Field(grid, 1j * acc)

    e1 = rel_err(duhamel(8), u)
    e2 = rel_err(duhamel(16), u)
    assert e2 < e1
    assert 3.0 < e1 / e2 < 5.0


def test_trajectory_interpolation_hits_snapshots(grid):
    traj = solve_linear(preset_coefficients("decay3"), gaussian(grid), T=0.02, dt=1e-3)
    assert np.array_equal(traj.at(0.005), traj.values[5])
    mid = traj.at(0.0055)
    fine = solve_linear(preset_coefficients("decay3"), gaussian(grid), T=0.0055, dt=5e-4).final
    assert rel_err(Field(grid, mid), fine) < 1e-6


def test_write_trajectory_manifest(tmp_path, small_grid):
    traj = solve_linear(preset_coefficients("const"), gaussian(small_grid), T=3e-3, dt=1e-3)
    manifest = write_trajectory(traj, tmp_path / "snaps")
    lines = manifest.read_text().splitlines()
    assert len(lines) == 4
    k, t, name = lines[2].split()
    assert (int(k), float(t)) == (2, pytest.approx(2e-3))
    assert (tmp_path / "snaps" / name).exists()
