"""End-to-end acceptance checks.

Every check appends one ``PASS``/``FAIL`` line (with its runtime against the
budget) to the log printed in pytest's terminal summary.
"""
import math
import time

import numpy as np
import pytest

from pevolab.data import band_limited_suite, forcing_suite, gaussian, schwartz_suite
from pevolab.grid import Grid1D
from pevolab.linear import exact_constant_solution, preset_coefficients, solve_linear
from pevolab.nonlinear import (lemma_a_constant, lemma_b_fit, mass, model_preset, select_indices, solve_nonlinear,
                               uniqueness_probe)
from pevolab.quantize import conjugator, default_test_fields, invert_conjugator, neumann_indicator, operator_norm
from pevolab.smoothing import (calibrate_garding, calibrate_levels, smoothing_contrast, verify_estimate_i,
                               verify_estimate_ii)
from pevolab.sobolev import NormSpec, algebra_defect, weighted_norm, weighted_norm_alt
from pevolab.symbols import DEFAULT_DY, LambdaParams, capital_lambda

pytestmark = pytest.mark.filterwarnings("ignore::pevolab.grid.BoundaryMassWarning")


def record(log, tag, checks, detail, start, budget):
    elapsed = time.perf_counter() - start
    failed = [name for name, ok in checks.items() if not ok]
    if elapsed > budget:
        failed.append("runtime")
    line = f"{'FAIL' if failed else 'PASS'} {tag}: {detail} [{elapsed:.1f} s of {budget:g} s]"
    if failed:
        line += f" (failed: {', '.join(failed)})"
    log.append(line)
    print(line)
    assert not failed, line


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_c01_constant_coefficient_exactness(acceptance_log):
    t0 = time.perf_counter()
    grid = Grid1D(40.0, 512)
    c = preset_coefficients("const", p=3)
    g = gaussian(grid)
    traj = solve_linear(c, g, T=0.1, dt=1e-3)
    err = rel_l2(traj.final.values, exact_constant_solution(c, g, 0.1).values)
    record(acceptance_log, "C01 constant-coefficient exactness", {"error <= 1e-6": err <= 1e-6},
           f"relative L2 error {err:.2e}", t0, 10)


def test_c02_illposed_growth_oracle(acceptance_log):
    t0 = time.perf_counter()
    grid = Grid1D(40.0, 512)
    gamma = 0.5
    c = preset_coefficients("illposed3", gamma=gamma)
    # largest horizon at which no grid mode grows by more than 1e3
    T = math.log(1e3) / (gamma * grid.xi_max ** 2)
    g = gaussian(grid, xi0=10.0, center=-10.0)
    traj = solve_linear(c, g, T=T, dt=T / 40, allow_illposed=True)
    ghat = grid.fft(g.values)
    oracle = math.sqrt(np.sum(np.abs(np.exp(gamma * grid.xi ** 2 * T) * ghat) ** 2) / np.sum(np.abs(ghat) ** 2))
    got = weighted_norm(traj.final) / weighted_norm(g)
    err = abs(got / oracle - 1)
    record(acceptance_log, "C02 ill-posed growth oracle", {"mismatch <= 1e-4": err <= 1e-4},
           f"T = {T:.4g}, growth {got:.4f} vs oracle {oracle:.4f}, mismatch {err:.2e}", t0, 10)


def test_c03_norm_equivalence(acceptance_log):
    t0 = time.perf_counter()
    checks, parts = {}, []
    for s in [(1.0, 1.0), (2.0, 1.0), (0.5, 2.0)]:
        Cs = []
        for N in (256, 512):
            grid = Grid1D(40.0, N)
            r = np.array([weighted_norm(u, NormSpec(*s)) / weighted_norm_alt(u, NormSpec(*s))
                          for u in band_limited_suite(grid, 3, 100)])
            Cs.append(max(r.max(), 1 / r.min()))
        drift = abs(Cs[1] / Cs[0] - 1)
        checks[f"{s} stable"] = drift <= 0.2
        parts.append(f"{s}: C = {Cs[0]:.4f} -> {Cs[1]:.4f}")
    record(acceptance_log, "C03 norm equivalence", checks, "; ".join(parts), t0, 30)


def test_c04_algebra_constant(acceptance_log):
    t0 = time.perf_counter()
    checks, parts = {}, []
    for s in [(1.0, 0.0), (1.0, 2.0)]:
        Cs = []
        for N in (256, 512):
            us = band_limited_suite(Grid1D(40.0, N), 4, 100)
            Cs.append(max(algebra_defect(us[2 * i], us[2 * i + 1], NormSpec(*s)) for i in range(50)))
        checks[f"{s} finite"] = all(math.isfinite(C) for C in Cs)
        checks[f"{s} stable"] = abs(Cs[1] / Cs[0] - 1) <= 0.2
        parts.append(f"{s}: C = {Cs[0]:.4g} -> {Cs[1]:.4g}")
    record(acceptance_log, "C04 algebra constant", checks, "; ".join(parts), t0, 30)


def test_c05_conjugator_invertibility(acceptance_log):
    t0 = time.perf_counter()
    grid = Grid1D(40.0, 256)
    c = preset_coefficients("decay3")
    hs = (4.0, 8.0, 16.0, 32.0)
    # larger h leave no frequencies in the calibration zone on this grid, so M comes from h = 4
    M = calibrate_levels(c, hs[0], grid)
    fields = default_test_fields(grid)
    rows = []
    for h in hs:
        Lam = capital_lambda(LambdaParams(c.p, c.sigma, h, M, DEFAULT_DY))
        E = conjugator(Lam, grid)
        rho = neumann_indicator(Lam, grid)
        direct = invert_conjugator(E, "direct", Lam, fields)
        row = {"h": h, "rho": rho, "defect": direct.info["defect"], "agree": None}
        if rho < 1:
            neu = invert_conjugator(E, "neumann", Lam, fields)
            row["defect"] = max(row["defect"], neu.info["defect"])
            row["agree"] = operator_norm(neu.matrix - direct.matrix) / operator_norm(direct.matrix)
        rows.append(row)
    good = [r for r in rows if r["rho"] < 1]
    half = [r for r in rows if r["rho"] < 0.5]
    checks = {
        "some h has rho < 1": bool(good),
        "identity defect <= 1e-8": all(r["defect"] <= 1e-8 for r in good),
        "direct and Neumann agree": all(r["agree"] <= 1e-8 for r in half),
    }
    detail = f"M = {M}; " + ", ".join(f"h={r['h']:g}: rho {r['rho']:.3g}, defect {r['defect']:.1e}" for r in rows)
    record(acceptance_log, "C05 conjugator invertibility", checks, detail, t0, 60)


def test_c06_garding_calibration(acceptance_log):
    t0 = time.perf_counter()
    grid = Grid1D(40.0, 256)
    gammas = (0.25, 0.5, 1.0)
    cals = [calibrate_garding(preset_coefficients("decay3", gamma=gm), 4.0, grid) for gm in gammas]
    thr = np.array([cal.threshold for cal in cals])
    slope = thr / np.array(gammas)
    Ls = (10.0, 20.0, 40.0, 80.0)
    budget = 64.0
    ill = [calibrate_garding(preset_coefficients("illposed3"), 2.0, Grid1D(L, int(6.4 * L)), M_max=budget) for L in Ls]
    found = [cal.found for cal in ill]
    checks = {
        "decay3 finite M": all(cal.found for cal in cals),
        "near-linear in gamma": float(slope.max() / slope.min() - 1) <= 0.1,
        "illposed threshold grows": bool(np.all(np.diff([cal.threshold for cal in ill]) > 0)),
        "illposed fails from some L on": (not found[-1]) and found == sorted(found, reverse=True),
    }
    detail = (f"decay3 M = {[cal.M for cal in cals]}, thresholds {np.round(thr, 4).tolist()}; "
              f"illposed thresholds {[round(cal.threshold, 1) for cal in ill]} (budget {budget:g})")
    record(acceptance_log, "C06 Garding symbol calibration", checks, detail, t0, 30)


def test_c07_smoothing_estimate(acceptance_log):
    t0 = time.perf_counter()
    Ts = (0.05, 0.1, 0.2)
    table = {}
    for N in (512, 1024):
        grid = Grid1D(40.0, N)
        c = preset_coefficients("decay3", sigma=2.0)
        runs = []
        for g, f in zip(schwartz_suite(grid, 11, 10), forcing_suite(grid, 12, 10)):
            traj = solve_linear(c, g, f, T=0.2, dt=5e-4)
            runs.append((verify_estimate_i(traj, f, g, 2.0, 2.0), verify_estimate_ii(traj, f, g, 2.0, 2.0)))
        for k, kind in enumerate(("i", "ii")):
            table[kind, N] = np.array([max(r[k].ratio_at(T) for r in runs) for T in Ts])
    checks = {}
    for kind in ("i", "ii"):
        lo, hi = table[kind, 512], table[kind, 1024]
        checks[f"({kind}) bounded"] = bool(np.all(np.isfinite(lo)))
        checks[f"({kind}) stable under N doubling"] = bool(np.all(np.abs(hi / lo - 1) <= 0.25))
        checks[f"({kind}) non-decreasing in T"] = bool(np.all(np.diff(lo) >= 0))
    detail = "; ".join(f"({k}) C_suite(T) = {np.round(table[k, 512], 3).tolist()} -> "
                       f"{np.round(table[k, 1024], 3).tolist()}" for k in ("i", "ii"))
    record(acceptance_log, "C07 smoothing estimate", checks, detail, t0, 300)


def test_c08_smoothing_contrast(acceptance_log):
    t0 = time.perf_counter()
    res = smoothing_contrast()
    oracle = abs(res.illposed_amplification / res.analytic_amplification - 1)
    checks = {"factor >= 10": res.factor >= 10, "ill-posed run matches oracle": oracle <= 1e-3}
    detail = (f"T = {res.T:.4g}, decay3 x{res.decay_amplification:.3f}, illposed3 x{res.illposed_amplification:.2f} "
              f"(oracle x{res.analytic_amplification:.2f}), factor {res.factor:.1f}")
    record(acceptance_log, "C08 smoothing contrast", checks, detail, t0, 30)


def test_c09_kdv_contraction(acceptance_log):
    t0 = time.perf_counter()
    grid = Grid1D(40.0, 256)
    c, spec = model_preset("kdv")
    g = gaussian(grid, amplitude=0.1)
    tol = 1e-8
    u, rep = solve_nonlinear(g, c, spec, T=0.1, dt=1e-3, tol=tol)
    dist = uniqueness_probe(g, c, spec, T=0.1, dt=1e-3, tol=tol, starts=("perturbed",))["perturbed"]
    checks = {
        "converged at T": rep.converged and rep.T_star == 0.1,
        "ratios < 1": all(r < 1 for r in rep.ratios),
        "<= 12 iterations": len(rep.d) <= 12,
        "residual <= 1e-4": rep.residual <= 1e-4,
        "uniqueness <= 10 tol": dist <= 10 * tol,
    }
    detail = (f"{len(rep.d)} iterations, ratios {[f'{r:.2g}' for r in rep.ratios]}, "
              f"residual {rep.residual:.2e}, uniqueness distance {dist:.1e}")
    record(acceptance_log, "C09 KdV contraction", checks, detail, t0, 300)


def test_c10_kawahara_mass(acceptance_log):
    t0 = time.perf_counter()
    grid = Grid1D(40.0, 256)
    c, spec = model_preset("kawahara")
    g = gaussian(grid, amplitude=0.1)
    u, rep = solve_nonlinear(g, c, spec, T=0.1, dt=4e-4, tol=1e-7)
    m0 = mass(g)
    drift = max(abs(mass(u.field(k)) - m0) for k in range(len(u))) / abs(m0)
    checks = {"converged": rep.converged, "ratios < 1": all(r < 1 for r in rep.ratios),
              "mass drift <= 1e-6": drift <= 1e-6}
    detail = f"T* = {rep.T_star:g}, ratios {[f'{r:.2g}' for r in rep.ratios]}, mass drift {drift:.1e}"
    record(acceptance_log, "C10 Kawahara mass", checks, detail, t0, 300)


@pytest.mark.xfail(strict=True, reason="forcing-bound constant moves by about 2x when T is halved")
def test_c11a_forcing_bound_stability(acceptance_log):
    t0 = time.perf_counter()
    grid = Grid1D(40.0, 256)
    c, spec = model_preset("kdv")
    g = gaussian(grid, amplitude=0.1)
    idx = select_indices(c.sigma, c.p)
    consts = []
    for T in (0.1, 0.05):
        u, _ = solve_nonlinear(g, c, spec, T=T, dt=1e-3)
        consts.append(lemma_a_constant(u, g, idx, spec)[0])
    change = consts[1] / consts[0] - 1
    checks = {"constant exists": all(math.isfinite(C) and C > 0 for C in consts),
              "stable within 50%": abs(change) <= 0.5}
    detail = f"C(0.1) = {consts[0]:.3e}, C(0.05) = {consts[1]:.3e}, change {100 * change:+.0f}%"
    record(acceptance_log, "C11a forcing-bound constant", checks, detail, t0, 60)


def test_c11b_propagator_bound_fit(acceptance_log):
    t0 = time.perf_counter()
    grid = Grid1D(40.0, 256)
    suite = schwartz_suite(grid, 21, 10)
    C, ok = lemma_b_fit(preset_coefficients("decay3"), suite, 2.0, 2, 0.1, 1e-3)
    trivial, ok0 = lemma_b_fit(preset_coefficients("const"), suite, 2.0, 0, 0.1, 1e-3)
    checks = {"fit exists": ok, "coefficients nonnegative": ok and all(v >= 0 for v in C),
              "unweighted case needs no correction": ok0 and trivial == ()}
    record(acceptance_log, "C11b propagator-bound fit", checks, f"(s, n) = (2, 2): C_j = {C}", t0, 60)


def test_c12_index_pins(acceptance_log):
    t0 = time.perf_counter()
    even = select_indices(2.0, 3)
    odd = select_indices(1.5, 3)
    checks = {"sigma = 2 gives N = 1": even.N == 1,
              "sigma = 1.5, p = 3 gives (23, 14)": (odd.m, odd.m_tilde) == (23.0, 14.0)}
    detail = (f"sigma=2: N={even.N}, m={even.m:g}, m~={even.m_tilde:g}; "
              f"sigma=1.5: N={odd.N}, m={odd.m:g}, m~ in ({odd.interval[0]:g}, {odd.interval[1]:g}] -> {odd.m_tilde:g}")
    record(acceptance_log, "C12 index selection", checks, detail, t0, 5)

