"""Numerical checks of the smoothing energy estimates.

Three families of diagnostics:

* weighted energy norms along a trajectory and the ratios of the two
  smoothing estimates (data in ``H^m``, forcing in ``H^m`` or in the weaker
  ``H^{m-(p-1)/2, sigma/2}``);
* sign checks of the Garding symbols obtained after conjugation, with dyadic
  calibration of the constants ``M``;
* the conjugated energy ``||op(e^Lambda) u||^2`` against a Gronwall envelope.

Estimate ratios at time ``T`` are taken as the sup over ``t <= T`` of the
ratio on ``[0, t]``, i.e. the smallest constant valid on every sub-interval.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistencyError, ParameterError
from .grid import Grid1D, bracket, japanese
from .linear import Coefficients, Trajectory, _forcing_values, exact_constant_solution, preset_coefficients, solve_linear
from .quantize import conjugator, invert_conjugator, neumann_indicator
from .sobolev import NormSpec, cumulative_time_integral, squared_norms
from .symbols import DEFAULT_DY, LambdaParams, capital_lambda

GARDING_EPS = 1e-2
ENVELOPE_SLACK = 1e-6


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _label(spec: NormSpec) -> str:
    return f"H^{{{spec.s1:g};{spec.s2:g}}}"


def smoothing_specs(m: float, sigma: float, p: int, h: float = 1.0) -> list[NormSpec]:
    """Norms gained by the estimate: level ``p-1`` first, then ``p-j`` for j = 2..p-1."""
    specs = [NormSpec(m + (p - 1) / 2, -sigma / 2, h)]
    for j in range(2, p):
        specs.append(NormSpec(m + (p - j) / 2, -(p - j) / (2 * (p - 1)), h))
    return specs


# --------------------------------------------------------------------------- energy norms

@dataclass
class EnergyReport:
    """Squared norms per snapshot and their cumulative time integrals."""

    m: float
    sigma: float
    p: int
    times: np.ndarray
    hm: np.ndarray
    specs: list
    smoothing: np.ndarray  # (n_specs, K)
    cumulative: np.ndarray  # (n_specs, K)
    data_norm: float = 0.0
    h: float = 1.0

    @property
    def integrals(self) -> np.ndarray:
        return self.cumulative[:, -1] if self.times.size else np.zeros(len(self.specs))

    def header(self) -> list[str]:
        labels = [_label(s) for s in self.specs]
        return ["t", f"H^{self.m:g}"] + labels + [f"int {lab}" for lab in labels]

    def rows(self):
        for k, t in enumerate(self.times):
            yield ([_fmt(t), _fmt(math.sqrt(self.hm[k]))]
                   + [_fmt(math.sqrt(v)) for v in self.smoothing[:, k]]
                   + [_fmt(v) for v in self.cumulative[:, k]])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        w.writerows(self.rows())
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def summary(self) -> str:
        lines = [f"m: {self.m:g}", f"sigma: {self.sigma:g}", f"p: {self.p}",
                 f"snapshots: {self.times.size}", f"data H^m norm: {_fmt(math.sqrt(self.data_norm))}"]
        if self.times.size:
            lines.append(f"sup H^m norm: {_fmt(math.sqrt(self.hm.max()))}")
        for spec, val in zip(self.specs, self.integrals):
            lines.append(f"int {_label(spec)}: {_fmt(val)}")
        return "\n".join(lines) + "\n"


def energy_functionals(traj: Trajectory, m: float, sigma: float, h: float = 1.0) -> EnergyReport:
    """Per-snapshot ``||u||^2_{H^m}``, the smoothing norms and their running integrals."""
    p = traj.coefficients.p if traj.coefficients is not None else 3
    grid = traj.grid
    specs = smoothing_specs(m, sigma, p, h)
    hm = squared_norms(grid, traj.values, NormSpec(m, 0, h))
    sm = np.array([squared_norms(grid, traj.values, s) for s in specs]).reshape(len(specs), -1)
    cum = np.array([cumulative_time_integral(row, traj.times) for row in sm]).reshape(len(specs), -1)
    data = float(hm[0]) if hm.size else 0.0
    return EnergyReport(m, sigma, p, traj.times.copy(), hm, specs, sm, cum, data, h)


# --------------------------------------------------------------------------- estimates

@dataclass
class EstimateResult:
    kind: str
    ratio: float
    lhs: np.ndarray
    rhs: np.ndarray
    times: np.ndarray

    def ratio_at(self, T: float) -> float:
        """Estimate constant on ``[0, T]``: the sup of the pointwise ratios up to ``T``."""
        mask = self.times <= T + 1e-12
        return _sup_ratio(self.lhs[mask], self.rhs[mask])

    def passed(self, C_suite: float) -> bool:
        return self.ratio <= C_suite


def _sup_ratio(lhs, rhs) -> float:
    bad = (rhs <= 0) & (lhs > 0)
    if np.any(bad):
        raise InconsistencyError("estimate right-hand side vanishes while the left-hand side does not")
    pos = rhs > 0
    return float(np.max(lhs[pos] / rhs[pos])) if np.any(pos) else 0.0


def _forcing_norms(traj: Trajectory, f, spec: NormSpec) -> np.ndarray:
    if f is None:
        return np.zeros(traj.times.size)
    vals = []
    for t in traj.times:
        fv = _forcing_values(f, t, traj.grid)
        vals.append(np.zeros(traj.grid.N) if fv is None else fv)
    return squared_norms(traj.grid, np.array(vals), spec)


def _estimate(traj, f, g, m, sigma, forcing_spec, kind, h) -> EstimateResult:
    rep = energy_functionals(traj, m, sigma, h)
    lhs = np.maximum.accumulate(rep.hm) + rep.cumulative.sum(axis=0)
    gv = g.values if hasattr(g, "values") else np.asarray(g)
    g2 = float(squared_norms(traj.grid, gv, NormSpec(m, 0, h)))
    rhs = g2 + cumulative_time_integral(_forcing_norms(traj, f, forcing_spec), traj.times)
    return EstimateResult(kind, _sup_ratio(lhs, rhs), lhs, rhs, traj.times.copy())


def verify_estimate_i(traj: Trajectory, f, g, m: float, sigma: float, h: float = 1.0) -> EstimateResult:
    """Ratio of the smoothing estimate with forcing measured in ``H^m``."""
    return _estimate(traj, f, g, m, sigma, NormSpec(m, 0, h), "i", h)


def verify_estimate_ii(traj: Trajectory, f, g, m: float, sigma: float, h: float = 1.0) -> EstimateResult:
    """Ratio of the estimate with forcing in ``H^{m-(p-1)/2, sigma/2}``."""
    p = traj.coefficients.p if traj.coefficients is not None else 3
    return _estimate(traj, f, g, m, sigma, NormSpec(m - (p - 1) / 2, sigma / 2, h), "ii", h)


def suite_constant(results) -> float:
    return max((r.ratio for r in results), default=0.0)


# --------------------------------------------------------------------------- Garding symbols

@dataclass
class GardingReport:
    level: int
    M: float
    h: float
    C_target: float
    min_value: float
    witness: tuple  # (t, x, xi)
    threshold: float

    @property
    def passed(self) -> bool:
        return self.min_value >= 0

    def __str__(self):
        t, x, xi = self.witness
        return (f"{'PASS' if self.passed else 'FAIL'} level {self.level}: M = {self.M:g}, min = {self.min_value:.6g} "
                f"at t = {t:.4g}, x = {x:.4g}, xi = {xi:.4g}")


def _garding_parts(c: Coefficients, h: float, grid: Grid1D, level: int, T: float, n_times: int):
    """Zone samples of the pieces of ``c_level = M A - Im a xi^level - C_target B``."""
    p = c.p
    j = p - level
    if not 1 <= j <= p - 1:
        raise ParameterError(f"level must lie in 1..{p - 1}, got {level}")
    xi = np.asarray(grid.xi)
    xi = xi[np.abs(xi) >= 2 * h]
    if xi.size == 0:
        raise ParameterError(f"the zone |xi| >= 2h = {2 * h:g} is empty on this grid (xi_max = {grid.xi_max:g})")
    x = np.asarray(grid.x)
    rate = c.sigma if j == 1 else level / (p - 1)
    wx = japanese(x) ** (-rate)
    jb = bracket(xi, h)
    ts = np.linspace(0.0, T, n_times)
    A = np.array([p * c.a_p(t) * np.outer(wx, np.abs(xi) ** (p - 1) * jb ** (1 - j)) for t in ts])
    B = np.outer(wx, jb ** level)
    Im = np.array([np.outer(c.a(level, t, x).imag, xi ** level) for t in ts])
    return ts, x, xi, A, B, Im


def garding_symbol_check(c: Coefficients, M: float, h: float, C_target: float, grid: Grid1D | None = None,
                         level: int | None = None, T: float = 1.0, n_times: int = 5) -> GardingReport:
    """Minimum over the zone ``|xi| >= 2h`` of the conjugated Garding symbol.

    ``level`` defaults to ``p - 1``; lower levels use the analogous symbol with
    ``M p a_p |xi|^{p-1} <xi>_h^{-(j-1)} <x>^{-(p-j)/(p-1)}`` as the positive part.
    """
    grid = grid or Grid1D()
    level = c.p - 1 if level is None else level
    ts, x, xi, A, B, Im = _garding_parts(c, h, grid, level, T, n_times)
    vals = M * A - Im - C_target * B
    it, ix, ik = np.unravel_index(int(np.argmin(vals)), vals.shape)
    return GardingReport(level, M, h, C_target, float(vals[it, ix, ik]),
                         (float(ts[it]), float(x[ix]), float(xi[ik])),
                         _threshold(A, B, Im, GARDING_EPS))


def _threshold(A, B, Im, eps) -> float:
    den = A - eps * B
    if np.any((den <= 0) & (Im > 0)):
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(den > 0, Im / den, 0.0)
    return max(0.0, float(np.max(r)))


@dataclass
class GardingCalibration:
    level: int
    M: float | None
    threshold: float
    report: GardingReport | None

    @property
    def found(self) -> bool:
        return self.M is not None


def calibrate_garding(c: Coefficients, h: float, grid: Grid1D | None = None, level: int | None = None,
                      eps: float = GARDING_EPS, M_max: float = 2.0 ** 20, T: float = 1.0,
                      n_times: int = 5) -> GardingCalibration:
    """Smallest dyadic ``M`` with a nonnegative symbol for ``C_target = eps M``.

    ``threshold`` is the exact smallest real ``M`` on the grid. Levels with
    nothing to compensate calibrate to ``M = 0``.
    """
    grid = grid or Grid1D()
    level = c.p - 1 if level is None else level
    ts, x, xi, A, B, Im = _garding_parts(c, h, grid, level, T, n_times)
    thr = _threshold(A, B, Im, eps)
    if thr == 0:
        rep = garding_symbol_check(c, 0.0, h, 0.0, grid, level, T, n_times)
        return GardingCalibration(level, 0.0, 0.0, rep)
    if not math.isfinite(thr) or thr > M_max:
        return GardingCalibration(level, None, thr, None)
    k = math.ceil(math.log2(thr))
    while 2.0 ** k <= M_max:
        M = 2.0 ** k
        rep = garding_symbol_check(c, M, h, eps * M, grid, level, T, n_times)
        if rep.passed:
            return GardingCalibration(level, M, thr, rep)
        k += 1
    return GardingCalibration(level, None, thr, None)


def calibrate_levels(c: Coefficients, h: float, grid: Grid1D | None = None, eps: float = GARDING_EPS,
                     M_max: float = 2.0 ** 20) -> tuple:
    """``(M_{p-1}, ..., M_1)``, top level first; raises if any level cannot be calibrated."""
    out = []
    for level in range(c.p - 1, 0, -1):
        cal = calibrate_garding(c, h, grid, level, eps, M_max)
        if not cal.found:
            raise ParameterError(f"no M <= {M_max:g} makes the level-{level} symbol nonnegative "
                                 f"(threshold {cal.threshold:.4g})")
        out.append(cal.M)
    return tuple(out)


# --------------------------------------------------------------------------- conjugation

@dataclass
class ConjugationReport:
    M: tuple
    h: float
    kappa: float
    rho: float | None
    identity_defect: float
    C_runs: np.ndarray
    C: float
    excess: np.ndarray
    slack: float = ENVELOPE_SLACK
    series: list = field(default_factory=list, repr=False)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.excess <= self.slack))


def _conjugated_series(E: np.ndarray, traj: Trajectory, f, specs):
    grid = traj.grid
    V = E @ traj.values.T  # (N, K)
    energy = grid.dx * np.sum(np.abs(V) ** 2, axis=0)
    smooth = sum(squared_norms(grid, V.T, s) for s in specs)
    if f is None:
        forcing = np.zeros_like(energy)
    else:
        F = np.array([_forcing_values(f, t, grid) for t in traj.times])
        forcing = grid.dx * np.sum(np.abs(F @ E.T) ** 2, axis=1)
    return energy, smooth, forcing


def gronwall_envelope(times, V0, C, source) -> np.ndarray:
    """``e^{Ct} (V0 + int_0^t e^{-Cs} source(s) ds)`` with trapezoidal quadrature."""
    times = np.asarray(times, dtype=float)
    integral = cumulative_time_integral(np.exp(-C * times) * source, times) if times.size > 1 else np.zeros(1)
    return np.exp(C * times) * (V0 + integral)


def conjugation_diagnostics(c: Coefficients, trajectories, h: float = 4.0, M: tuple | None = None,
                            forcing=None, eps: float = GARDING_EPS, slack: float = ENVELOPE_SLACK,
                            C: float | None = None, mode: str = "neumann") -> ConjugationReport:
    """Identity defect of the conjugator inverse and the conjugated energy envelope.

    With ``v = op(e^Lambda) u`` and ``kappa = eps M_{p-1}`` the inequality
    ``dV/dt <= C V + ||op(e^Lambda) f||^2 - kappa S`` (``S`` the smoothing
    norms of ``v`` at ``m = 0``) gives a per-run constant from centered
    differences of ``V``; the suite constant is their max unless ``C`` is given,
    and each run is checked against its Gronwall envelope.
    """
    trajectories = list(trajectories)
    grid = trajectories[0].grid
    if M is None:
        M = calibrate_levels(c, h, grid, eps)
    params = LambdaParams(c.p, c.sigma, h, tuple(M), DEFAULT_DY)
    Lam = capital_lambda(params)
    Eop = conjugator(Lam, grid)
    rho = None
    if any(params.M):
        rho = neumann_indicator(Lam, grid)
        inv = invert_conjugator(Eop, mode if rho < 1 else "direct", Lam)
        defect = inv.info["defect"]
    else:
        defect = 0.0
    kappa = eps * params.M[0]
    specs = smoothing_specs(0.0, c.sigma, c.p, h)
    forcings = forcing if isinstance(forcing, (list, tuple)) else [forcing] * len(trajectories)
    series, C_runs = [], []
    for traj, f in zip(trajectories, forcings):
        energy, smooth, fnorm = _conjugated_series(Eop.matrix, traj, f, specs)
        dV = np.gradient(energy, traj.times)
        need = np.where(energy > 0, (dV - fnorm + kappa * smooth) / np.where(energy > 0, energy, 1), 0.0)
        C_runs.append(max(0.0, float(np.max(need))))
        series.append((traj.times, energy, smooth, fnorm))
    C_runs = np.array(C_runs)
    C_used = float(C_runs.max()) if C is None else float(C)
    excess = []
    for times, energy, smooth, fnorm in series:
        env = gronwall_envelope(times, energy[0], C_used, fnorm - kappa * smooth)
        scale = max(float(np.max(energy)), 1e-300)
        excess.append(float(np.max(energy - env)) / scale)
    return ConjugationReport(tuple(params.M), h, kappa, rho, defect, C_runs, C_used, np.array(excess), slack, series)


# --------------------------------------------------------------------------- contrast

@dataclass
class ContrastResult:
    T: float
    decay_amplification: float
    illposed_amplification: float
    analytic_amplification: float

    @property
    def factor(self) -> float:
        return self.illposed_amplification / self.decay_amplification


def hm_amplification(traj: Trajectory, m: float) -> float:
    """``sup_t ||u(t)||_{H^m} / ||g||_{H^m}``."""
    hm = squared_norms(traj.grid, traj.values, NormSpec(m, 0))
    return float(np.sqrt(hm.max() / hm[0]))


def smoothing_contrast(grid: Grid1D | None = None, gamma: float = 0.5, xi0: float = 10.0, x0: float = -15.0,
                       width: float = 1.0, m: float = 2.0, growth: float = 100.0, steps: int = 40) -> ContrastResult:
    """Run matched wave-packet data through ``decay3`` and ``illposed3``.

    ``T = ln(growth) / (gamma xi0^2)`` makes the constant imaginary coefficient
    amplify the packet's central frequency by ``growth``.
    """
    from .data import gaussian

    grid = grid or Grid1D()
    g = gaussian(grid, width=width, center=x0, xi0=xi0)
    T = math.log(growth) / (gamma * xi0 ** 2)
    dt = T / steps
    dec = solve_linear(preset_coefficients("decay3", gamma=gamma), g, T=T, dt=dt)
    ill_c = preset_coefficients("illposed3", gamma=gamma)
    ill = solve_linear(ill_c, g, T=T, dt=dt, allow_illposed=True)
    hm0 = float(squared_norms(grid, g.values, NormSpec(m, 0)))
    exact = [float(squared_norms(grid, exact_constant_solution(ill_c, g, t).values, NormSpec(m, 0)))
             for t in ill.times]
    return ContrastResult(T, hm_amplification(dec, m), hm_amplification(ill, m), math.sqrt(max(exact) / hm0))
