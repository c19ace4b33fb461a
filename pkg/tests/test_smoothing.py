import warnings

import numpy as np
import pytest

from pevolab.data import forcing_suite, gaussian
from pevolab.errors import InconsistencyError, ParameterError
from pevolab.grid import BoundaryMassWarning, Field, Grid1D
from pevolab.linear import Trajectory, preset_coefficients, solve_linear
from pevolab.smoothing import (calibrate_garding, calibrate_levels, conjugation_diagnostics, energy_functionals,
                               garding_symbol_check, gronwall_envelope, smoothing_contrast, smoothing_specs,
                               suite_constant, verify_estimate_i, verify_estimate_ii)
from pevolab.sobolev import NormSpec


@pytest.fixture(autouse=True)
def _quiet_boundary():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryMassWarning)
        yield


@pytest.fixture(scope="module")
def decay_run():
    grid = Grid1D(40.0, 256)
    c = preset_coefficients("decay3")
    g = gaussian(grid, center=2.0)
    f = forcing_suite(grid, 11, 1)[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryMassWarning)
        return c, g, f, solve_linear(c, g, f, T=0.05, dt=1e-3)


def test_smoothing_specs_p3():
    specs = smoothing_specs(2.0, 1.5, 3)
    assert specs == [NormSpec(3.0, -0.75, 1.0), NormSpec(2.5, -0.25, 1.0)]
    assert len(smoothing_specs(0.0, 2.0, 5)) == 4


def test_zero_trajectory_has_zero_energy(grid):
    traj = Trajectory(grid, np.linspace(0, 0.02, 3), np.zeros((3, grid.N)), preset_coefficients("decay3"))
    rep = energy_functionals(traj, 2.0, 2.0)
    assert np.all(rep.hm == 0) and np.all(rep.cumulative == 0)
    lines = rep.to_csv().splitlines()
    assert len(lines) == 4
    assert lines[0].split(",")[:2] == ["t", "H^2"]


def test_empty_report_is_header_only(grid):
    traj = Trajectory(grid, np.zeros(0), np.zeros((0, grid.N)), preset_coefficients("decay3"))
    rep = energy_functionals(traj, 1.0, 2.0)
    assert rep.to_csv().count("\n") == 1
    assert "snapshots: 0" in rep.summary()


def test_energy_csv_written(tmp_path, decay_run):
    *_, traj = decay_run
    rep = energy_functionals(traj, 1.0, 2.0)
    rep.to_csv(tmp_path / "energy.csv")
    rows = (tmp_path / "energy.csv").read_text().splitlines()
    assert len(rows) == len(traj) + 1
    assert np.all(np.diff(rep.cumulative, axis=1) >= 0)


def test_hm_norm_conserved_for_constant_coefficients(grid):
    traj = solve_linear(preset_coefficients("const"), gaussian(grid, xi0=1.0), T=0.05, dt=1e-3)
    hm = energy_functionals(traj, 2.0, 2.0).hm
    assert np.max(np.abs(hm / hm[0] - 1)) < 1e-10


def test_estimates_agree_without_forcing(grid):
    c = preset_coefficients("decay3")
    g = gaussian(grid)
    traj = solve_linear(c, g, T=0.05, dt=1e-3)
    r1 = verify_estimate_i(traj, None, g, 2.0, 2.0)
    r2 = verify_estimate_ii(traj, None, g, 2.0, 2.0)
    assert r1.ratio == r2.ratio
    assert r1.ratio >= 1.0


def test_estimate_ratio_is_scale_invariant(decay_run):
    c, g, f, traj = decay_run
    r = verify_estimate_i(traj, f, g, 1.0, 2.0)
    scaled = Trajectory(traj.grid, traj.times, 3.0 * traj.values, c)
    r3 = verify_estimate_i(scaled, f.scaled(3.0), Field(g.grid, 3.0 * g.values), 1.0, 2.0)
    assert r3.ratio == pytest.approx(r.ratio, rel=1e-12)
    assert r.ratio_at(traj.T) == r.ratio
    assert r.ratio_at(0.0) == pytest.approx(1.0)
    assert suite_constant([r, r3]) == max(r.ratio, r3.ratio)
    assert suite_constant([]) == 0.0


def test_estimate_detects_zero_rhs(grid):
    traj = Trajectory(grid, [0.0, 1e-3], np.ones((2, grid.N)), preset_coefficients("decay3"))
    with pytest.raises(InconsistencyError):
        verify_estimate_i(traj, None, Field.zeros(grid), 1.0, 2.0)


def test_garding_trivial_for_real_coefficients(grid):
    cal = calibrate_garding(preset_coefficients("const"), 4.0, grid)
    assert cal.found and cal.M == 0.0 and cal.threshold == 0.0
    assert calibrate_levels(preset_coefficients("const"), 4.0, grid) == (0.0, 0.0)


def test_garding_minimum_increases_with_M(grid):
    c = preset_coefficients("decay3")
    mins = [garding_symbol_check(c, M, 4.0, 0.0, grid).min_value for M in (0.0, 0.25, 1.0, 4.0)]
    assert mins[0] < 0
    assert np.all(np.diff(mins) > 0)
    assert mins[-1] >= 0


def test_garding_threshold_scales_with_gamma(grid):
    t1 = calibrate_garding(preset_coefficients("decay3", gamma=0.5), 4.0, grid).threshold
    t2 = calibrate_garding(preset_coefficients("decay3", gamma=1.0), 4.0, grid).threshold
    assert t2 == pytest.approx(2 * t1, rel=1e-12)


def test_calibrated_M_passes_its_check(grid):
    c = preset_coefficients("decay3")
    cal = calibrate_garding(c, 4.0, grid)
    assert cal.found and cal.report.passed
    assert cal.M >= cal.threshold
    assert cal.M / 2 < cal.threshold or cal.M == 2.0 ** np.ceil(np.log2(cal.threshold))


def test_illposed_threshold_grows_with_box():
    c = preset_coefficients("illposed3")
    thresholds = [calibrate_garding(c, 2.0, Grid1D(L, int(8 * L))).threshold for L in (10.0, 20.0, 40.0)]
    assert np.all(np.diff(thresholds) > 0)
    assert thresholds[-1] > 3 * thresholds[0]


def test_empty_zone_raises():
    with pytest.raises(ParameterError, match="empty"):
        calibrate_garding(preset_coefficients("decay3"), 32.0, Grid1D(40.0, 256))


def test_gronwall_envelope_closed_form():
    t = np.linspace(0, 1, 2001)
    env = gronwall_envelope(t, 2.0, 0.5, np.zeros_like(t))
    np.testing.assert_allclose(env, 2.0 * np.exp(0.5 * t))
    flat = gronwall_envelope(t, 1.0, 0.0, np.ones_like(t))
    np.testing.assert_allclose(flat, 1.0 + t, atol=1e-12)


def test_conjugation_with_zero_M(grid):
    c = preset_coefficients("const")
    traj = solve_linear(c, gaussian(grid), T=0.02, dt=1e-3)
    rep = conjugation_diagnostics(c, [traj], h=4.0, M=(0.0, 0.0))
    assert rep.rho is None and rep.identity_defect == 0.0 and rep.kappa == 0.0
    assert rep.passed
    assert rep.C == pytest.approx(0.0, abs=1e-6)


def test_conjugation_decay3(decay_run):
    c, g, f, traj = decay_run
    rep = conjugation_diagnostics(c, [traj], h=4.0, forcing=f)
    assert rep.M == (0.25, 0.0625)
    assert rep.rho == pytest.approx(0.52, abs=0.01)
    assert rep.identity_defect < 1e-8
    assert rep.passed


def test_contrast_separates_decay_from_illposed():
    res = smoothing_contrast(Grid1D(40.0, 256))
    assert res.illposed_amplification == pytest.approx(res.analytic_amplification, rel=1e-3)
    assert res.factor > 10
    assert res.decay_amplification < 5
