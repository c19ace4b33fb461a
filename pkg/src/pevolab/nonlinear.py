"""Nonlinear problems ``P u = Q(u)`` by Picard iteration in the space ``X_T``.

``Q = c u^n conj(u)^q D^r u`` (``r >= 1``) or ``c u^n conj(u)^q`` (``r = 0``);
sums of such monomials are passed as a tuple of specs. Writing
``Q(u) = f~(u) + c g^n conj(g)^q D^r u`` moves the second part into the linear
operator, ``P~ = P - c g^n conj(g)^q D^r``, and each Picard step solves the
linear problem ``P~ w = f~(u_k)``, ``w(0) = g`` (the Duhamel map).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidInputError, NoConvergenceError, ParameterError, PevoError, PreconditionError
from .grid import BOUNDARY_MASS_THRESHOLD, Field, Grid1D, boundary_mass
from .linear import (Coefficients, Trajectory, _integrate, _simpson, check_hypotheses, preset_coefficients)
from .sobolev import NormSpec, cumulative_time_integral, squared_norms


# --------------------------------------------------------------------------- specs and indices

@dataclass(frozen=True)
class NonlinearSpec:
    n: int
    q: int
    r: int
    c: complex = 1.0

    def __post_init__(self):
        if self.n < 0 or self.q < 0 or self.r < 0:
            raise ParameterError(f"n, q, r must be nonnegative, got {(self.n, self.q, self.r)}")
        if self.r >= 1 and self.n + self.q < 1:
            raise ParameterError("a derivative nonlinearity needs n + q >= 1")
        if self.r == 0 and (self.n < 1 or self.n + self.q < 2):
            raise ParameterError("for r = 0 the nonlinearity needs n >= 1 and n + q >= 2")

    @property
    def degree(self) -> int:
        """``n + q``: the power of the amplitude factor in the lemma bound."""
        return self.n + self.q


def _specs(spec) -> tuple:
    specs = (spec,) if isinstance(spec, NonlinearSpec) else tuple(spec)
    if not specs:
        raise ParameterError("at least one nonlinear monomial is required")
    return specs


def _check_order(specs, p: int):
    for s in specs:
        if s.r > p - 1:
            raise ParameterError(f"derivative order r = {s.r} must not exceed p - 1 = {p - 1}")


@dataclass(frozen=True)
class IndexSelection:
    sigma: float
    p: int
    N: int
    m: float
    m_tilde: float
    interval: tuple

    @property
    def two_N(self) -> int:
        return 2 * self.N


def select_indices(sigma: float, p: int, m: float | None = None, m_tilde: float | None = None) -> IndexSelection:
    """Regularity indices for the fixed-point space.

    ``2N`` is the smallest even integer ``>= sigma``; ``m`` is the smallest value
    ``(p-1)/2 + 2k`` above ``(4N + 11/2)(p-1) + 3``; ``m_tilde`` defaults to the
    right end of ``(m/2 + 3(p-1)/4 + 1/2, m - (2N+1)(p-1) - p]``.
    """
    if not sigma > 1:
        raise ParameterError(f"sigma must be > 1, got {sigma}")
    if p < 2:
        raise ParameterError(f"p must be >= 2, got {p}")
    N = math.ceil(sigma / 2 - 1e-12)
    bound = (4 * N + 5.5) * (p - 1) + 3
    base = (p - 1) / 2
    if m is None:
        k = max(1, math.floor((bound - base) / 2) + 1)
        m = base + 2 * k
    else:
        steps = (m - base) / 2
        if not (m > bound and steps >= 1 and abs(steps - round(steps)) < 1e-12):
            raise ParameterError(f"m = {m} must exceed {bound:g} with m - {base:g} a positive even integer")
    lo = m / 2 + 0.75 * (p - 1) + 0.5
    hi = m - (2 * N + 1) * (p - 1) - p
    if not lo < hi:
        raise PevoError(f"empty m_tilde interval ({lo:g}, {hi:g}] for m = {m:g}")
    if m_tilde is None:
        m_tilde = hi
    elif not lo < m_tilde <= hi:
        raise ParameterError(f"m_tilde = {m_tilde} outside ({lo:g}, {hi:g}]")
    return IndexSelection(float(sigma), int(p), int(N), float(m), float(m_tilde), (lo, hi))


# --------------------------------------------------------------------------- model presets

MODEL_PRESETS = ("kdv", "kawahara")


def model_preset(name: str, **params) -> tuple[Coefficients, tuple]:
    """Linear part and nonlinearity of the named model.

    ``kdv``       ``D_t u + D^3 u = -|u|^2 D u`` on the ``const`` coefficients
    ``kawahara``  ``kawahara5`` with ``Q = u D u``; for real data this is
                  ``u_t + b u_xxxxx - a u_xxx = u u_x``, which conserves ``int u``
    """
    if name == "kdv":
        return preset_coefficients("const", p=3, **params), (NonlinearSpec(1, 1, 1, -1.0),)
    if name == "kawahara":
        return preset_coefficients("kawahara5", **params), (NonlinearSpec(1, 0, 1, 1.0),)
    raise ParameterError(f"unknown model preset {name!r}")


# --------------------------------------------------------------------------- nonlinearity

def _derivative(grid: Grid1D, values, r: int):
    if r == 0:
        return values
    return grid.apply_multiplier(values, grid.multiplier_values(lambda xi: xi ** r))


def _monomial(u, s: NonlinearSpec, n_shift: int = 0):
    return u ** (s.n - n_shift) * np.conj(u) ** s.q


def nonlinearity_values(grid: Grid1D, u: np.ndarray, spec) -> np.ndarray:
    out = np.zeros(np.shape(u), dtype=complex)
    for s in _specs(spec):
        if s.r == 0:
            out += s.c * _monomial(u, s)
        else:
            out += s.c * _monomial(u, s) * _derivative(grid, u, s.r)
    return out


def apply_nonlinearity(u: Field, spec) -> Field:
    """``c u^n conj(u)^q D^r u`` (or ``c u^n conj(u)^q`` when ``r = 0``), summed over specs."""
    return Field(u.grid, nonlinearity_values(u.grid, u.values, spec))


def _split_values(grid, u, g, spec):
    out = np.zeros(np.shape(u), dtype=complex)
    for s in _specs(spec):
        if s.r == 0:
            out += s.c * (_monomial(u, s, 1) - _monomial(g, s, 1)) * u
        else:
            out += s.c * (_monomial(u, s) - _monomial(g, s)) * _derivative(grid, u, s.r)
    return out


def shifted_coefficients(c: Coefficients, g: Field, spec) -> Coefficients:
    """``P~ = P - c g^n conj(g)^q D^r``: the frozen part of ``Q`` as extra coefficients."""
    specs = _specs(spec)
    _check_order(specs, c.p)
    gv = g.values
    out = c
    extra = {}
    for s in specs:
        shift = 1 if s.r == 0 else 0
        extra[s.r] = extra.get(s.r, 0) - s.c * _monomial(gv, s, shift)
    for r, vals in sorted(extra.items()):
        out = out.with_extra(r, vals, g.grid)
    return out


def split_forcing(traj: Trajectory, t: float, g: Field, spec) -> Field:
    """``f~(t) = Q(u(t)) - c g^n conj(g)^q D^r u(t)`` from the trajectory."""
    if not (traj.times[0] - 1e-12 <= t <= traj.times[-1] + 1e-12):
        raise InvalidInputError(f"t = {t} outside trajectory range [{traj.times[0]}, {traj.times[-1]}]")
    return Field(traj.grid, _split_values(traj.grid, traj.at(t), g.values, spec))


class _FilteredInterpolant:
    """Cubic Hermite interpolation of a trajectory with the leading phase removed.

    ``v = exp(i A(t) xi^p) uhat`` with ``A = int a_p`` varies slowly even where
    ``xi^p dt`` is large, so interpolating ``v`` stays accurate at the top of
    the spectrum.
    """

    def __init__(self, traj: Trajectory, c: Coefficients):
        grid = traj.grid
        self.traj, self.c, self.grid = traj, c, grid
        self.lead = grid.multiplier_values(lambda xi: xi ** c.p).real
        times = traj.times
        A = np.zeros(times.size)
        for k in range(1, times.size):
            A[k] = A[k - 1] + _simpson(c.a_p, times[k - 1], times[k])
        self.A = A
        uhat = grid.fft(traj.values)
        ph = np.exp(1j * np.outer(A, self.lead))
        self.v = ph * uhat
        ap = np.array([c.a_p(t) for t in times])
        self.dv = ph * (grid.fft(traj.dudt) + 1j * np.outer(ap, self.lead) * uhat)

    def __call__(self, t: float) -> np.ndarray:
        tr = self.traj
        if tr.times.size == 1:
            return tr.values[0]
        dt = tr.dt
        s = (t - tr.times[0]) / dt
        k = min(max(int(np.floor(s + 1e-12)), 0), tr.times.size - 2)
        theta = s - k
        if abs(theta) < 1e-12:
            return tr.values[k]
        if abs(theta - 1) < 1e-12:
            return tr.values[k + 1]
        h00 = 2 * theta ** 3 - 3 * theta ** 2 + 1
        h10 = theta ** 3 - 2 * theta ** 2 + theta
        h01 = -2 * theta ** 3 + 3 * theta ** 2
        h11 = theta ** 3 - theta ** 2
        v = h00 * self.v[k] + h10 * dt * self.dv[k] + h01 * self.v[k + 1] + h11 * dt * self.dv[k + 1]
        A = self.A[k] + _simpson(self.c.a_p, tr.times[k], t)
        return self.grid.ifft(np.exp(-1j * A * self.lead) * v)


class _SplitForcing:
    """Callable ``t -> f~(t)`` reading the previous iterate between snapshots."""

    def __init__(self, traj: Trajectory, g: Field, spec, c: Coefficients):
        self.traj, self.g, self.spec = traj, g, spec
        self.interp = _FilteredInterpolant(traj, c)
        self._cache = {}

    def __call__(self, t):
        key = round(float(t), 14)
        val = self._cache.get(key)
        if val is None:
            if len(self._cache) > 8:
                self._cache.clear()
            val = _split_values(self.traj.grid, self.interp(t), self.g.values, self.spec)
            self._cache[key] = val
        return val


def constant_trajectory(g: Field, T: float, dt: float, c: Coefficients | None = None) -> Trajectory:
    """``u(t) = g`` on the time grid, with zero time derivative."""
    K = int(round(T / dt))
    times = np.linspace(0.0, T, K + 1)
    vals = np.tile(g.values, (K + 1, 1))
    return Trajectory(g.grid, times, vals, c, None, np.zeros_like(vals))


def perturbed_trajectory(base: Trajectory, seed: int = 0, size: float = 0.1) -> Trajectory:
    """``base + (t/T) phi`` with a seeded Schwartz profile ``phi`` of relative size ``size``."""
    from .data import random_schwartz

    grid = base.grid
    phi = random_schwartz(grid, np.random.default_rng(seed), width_range=(1.5, 3.0)).values
    amp = float(np.sqrt(np.max(np.sum(np.abs(base.values) ** 2, axis=1)) / max(np.sum(np.abs(phi) ** 2), 1e-300)))
    phi = size * amp * phi
    T = base.T if base.T > 0 else 1.0
    vals = base.values + np.outer(base.times / T, phi)
    dudt = base.dudt + phi / T
    return Trajectory(grid, base.times, vals, base.coefficients, None, dudt)


def picard_map(traj: Trajectory, g: Field, c: Coefficients, spec, T: float, dt: float,
               shifted: Coefficients | None = None) -> Trajectory:
    """One Picard step: solve ``P~ w = f~(traj)``, ``w(0) = g`` on ``[0, T]``."""
    if traj.times[-1] < T - 1e-12:
        raise InvalidInputError(f"trajectory ends at {traj.times[-1]} before T = {T}")
    ct = shifted if shifted is not None else shifted_coefficients(c, g, spec)
    out = _integrate(ct, g.values, g.grid, _SplitForcing(traj, g, spec, c), 0.0, T, dt)
    out.meta["spec"] = spec
    return out


# --------------------------------------------------------------------------- X_T norm

@dataclass
class XTNorm:
    components: dict

    @property
    def value(self) -> float:
        return math.sqrt(sum(self.components.values()))

    def __float__(self):
        return self.value


def xt_norm(traj: Trajectory, idx: IndexSelection, T: float | None = None, h: float = 1.0) -> XTNorm:
    """Squared components and value of the ``X_T`` norm on ``[0, T]``.

    The time derivative comes from the stored equation values ``traj.dudt``.
    """
    if traj.dudt is None:
        raise PreconditionError("the X_T norm needs the time derivative from the equation (traj.dudt)")
    times = traj.times
    K = times.size if T is None else int(np.searchsorted(times, T + 1e-12))
    if K < 1:
        raise InvalidInputError(f"no snapshots in [0, {T}]")
    grid, p, sigma, m = traj.grid, idx.p, idx.sigma, idx.m
    vals, dudt, ts = traj.values[:K], traj.dudt[:K], times[:K]
    comps = {"sup H^m": float(np.max(squared_norms(grid, vals, NormSpec(m, 0, h))))}
    smooth = squared_norms(grid, vals, NormSpec(m + (p - 1) / 2, -sigma / 2, h))
    for k in range(2, p):
        smooth = smooth + squared_norms(grid, vals, NormSpec(m + (p - k) / 2, -(p - k) / (2 * (p - 1)), h))
    comps["int smoothing"] = float(cumulative_time_integral(smooth, ts)[-1]) if K > 1 else 0.0
    weighted = NormSpec(idx.m_tilde, idx.two_N, h)
    comps["sup u weighted"] = float(np.max(squared_norms(grid, vals, weighted)))
    comps["sup dtu weighted"] = float(np.max(squared_norms(grid, dudt, weighted)))
    return XTNorm(comps)


def _difference(a: Trajectory, b: Trajectory) -> Trajectory:
    return Trajectory(a.grid, a.times, a.values - b.values, a.coefficients, None, a.dudt - b.dudt)


# --------------------------------------------------------------------------- residual

def _fd_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order finite differences along axis 0 (one-sided at the ends)."""
    K = values.shape[0]
    if K < 5:
        raise InvalidInputError("the residual needs at least 5 snapshots")
    d = np.empty_like(values)
    d[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * dt)
    fw = np.array([-25, 48, -36, 16, -3]) / (12 * dt)
    d[0] = np.tensordot(fw, values[:5], axes=1)
    d[1] = np.tensordot(np.array([-3, -10, 18, -6, 1]) / (12 * dt), values[:5], axes=1)
    d[-1] = -np.tensordot(fw, values[-5:][::-1], axes=1)
    d[-2] = -np.tensordot(np.array([-3, -10, 18, -6, 1]) / (12 * dt), values[-5:][::-1], axes=1)
    return d


def pde_residual(traj: Trajectory, c: Coefficients, spec) -> tuple[float, float]:
    """``(||P u - Q(u)||, ||Q(u)||)`` in ``L^2([0,T]; L^2)``.

    ``D_t u`` is differenced after removing the exact phase of the
    x-independent part of ``P`` (the leading term, plus all lower terms when
    the coefficients do not depend on x), so that part cancels analytically.
    """
    grid = traj.grid
    times = traj.times
    in_phase = sorted(c.lower) if c.x_independent else []
    x0 = np.zeros(1)
    parts = [(lambda t: c.a_p(t), grid.multiplier_values(lambda xi: xi ** c.p))]
    parts += [(lambda t, j=j: complex(c.a(j, t, x0)[0]), grid.multiplier_values(lambda xi, j=j: xi ** j))
              for j in in_phase]
    S = np.zeros((times.size, grid.N), dtype=complex)
    for fn, mult in parts:
        A = np.zeros(times.size, dtype=complex)
        for k in range(1, times.size):
            A[k] = A[k - 1] + _simpson(fn, times[k - 1], times[k])
        S += np.outer(A, mult)
    uhat = grid.fft(traj.values)
    phase = np.exp(1j * S)
    dv = _fd_derivative(phase * uhat, traj.dt)
    res = -1j * grid.ifft(dv / phase)
    for j in sorted(set(c.lower) - set(in_phase)):
        pw = grid.multiplier_values(lambda xi, j=j: xi ** j)
        for k, t in enumerate(times):
            res[k] += c.a(j, t, grid.x) * grid.ifft(pw * uhat[k])
    Q = np.array([nonlinearity_values(grid, u, spec) for u in traj.values])
    res = res - Q
    r2 = cumulative_time_integral(grid.dx * np.sum(np.abs(res) ** 2, axis=1), times)[-1]
    q2 = cumulative_time_integral(grid.dx * np.sum(np.abs(Q) ** 2, axis=1), times)[-1]
    return math.sqrt(r2), math.sqrt(q2)


# --------------------------------------------------------------------------- solver

@dataclass
class ContractionReport:
    d: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    residual: float = math.nan
    T_star: float = math.nan
    converged: bool = False
    tol: float = 1e-8
    attempts: list = field(default_factory=list)

    def contraction_factor(self, floor: float = 100.0) -> float:
        """Largest ratio ``d_k / d_{k-1}`` with ``d_k`` above ``floor * tol``.

        Ratios taken once the differences reach the round-off level of the
        high-order norms say nothing about the map, so they are excluded.
        """
        vals = [r for r, dk in zip(self.ratios, self.d[1:]) if dk > floor * self.tol]
        return max(vals, default=self.ratios[0] if self.ratios else 0.0)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "d_k", "ratio_k"])
        for k, dk in enumerate(self.d):
            ratio = self.ratios[k - 1] if k >= 1 else math.nan
            w.writerow([k, format(dk, ".17g"), "" if k == 0 else format(ratio, ".17g")])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def summary(self) -> str:
        lines = [f"T*: {self.T_star:.17g}", f"residual: {self.residual:.17g}",
                 f"converged: {self.converged}", f"iterations: {len(self.d)}", f"tol: {self.tol:g}"]
        for T, why in self.attempts:
            lines.append(f"abandoned T = {T:.17g}: {why}")
        return "\n".join(lines) + "\n"


def _iterate(g, c, spec, T, dt, idx, tol, max_iter, initial):
    ct = shifted_coefficients(c, g, spec)
    if initial == "propagated":
        u = _integrate(ct, g.values, g.grid, None, 0.0, T, dt)
    elif initial == "datum":
        u = constant_trajectory(g, T, dt, ct)
    elif initial == "perturbed":
        u = perturbed_trajectory(_integrate(ct, g.values, g.grid, None, 0.0, T, dt))
    else:
        raise ParameterError(f"initial iterate must be 'propagated', 'datum' or 'perturbed', got {initial!r}")
    d, ratios = [], []
    for _ in range(max_iter):
        new = picard_map(u, g, c, spec, T, dt, shifted=ct)
        scale = xt_norm(new, idx).value
        diff = xt_norm(_difference(new, u), idx).value
        dk = diff / scale if scale > 0 else 0.0
        if d:
            ratios.append(dk / d[-1] if d[-1] > 0 else 0.0)
        d.append(dk)
        u = new
        if dk < tol:
            return u, d, ratios, None
        if len(ratios) >= 2 and ratios[-1] >= 1 and ratios[-2] >= 1:
            return u, d, ratios, "stagnation"
    return u, d, ratios, "iteration limit"


def solve_nonlinear(g: Field, c: Coefficients, spec, T: float = 0.1, dt: float = 1e-3, tol: float = 1e-8,
                    max_iter: int = 12, T_min: float | None = None, idx: IndexSelection | None = None,
                    initial: str = "propagated", check: bool = True) -> tuple[Trajectory, ContractionReport]:
    """Picard iteration ``u_{k+1} = Phi(u_k)`` measured in the ``X_T`` norm.

    ``d_k`` is relative: ``||u_{k+1} - u_k||_{X_T} / ||u_{k+1}||_{X_T}``.
    Two consecutive ratios ``>= 1`` (or hitting ``max_iter``) halve ``T`` and
    restart; below ``T_min`` a :class:`NoConvergenceError` carries the report.
    """
    specs = _specs(spec)
    _check_order(specs, c.p)
    if check:
        report = check_hypotheses(c, g.grid, T=T)
        if not report.passed:
            raise PreconditionError(f"coefficients {c.name!r} fail {report.failed()}")
        if boundary_mass(g) > BOUNDARY_MASS_THRESHOLD:
            raise PreconditionError(f"datum boundary mass {boundary_mass(g):.3e} exceeds {BOUNDARY_MASS_THRESHOLD:g}")
    idx = idx or select_indices(c.sigma, c.p)
    T_min = T / 64 if T_min is None else T_min
    rep = ContractionReport(tol=tol)
    T_cur = T
    while T_cur >= T_min - 1e-15:
        steps = max(5, int(round(T_cur / dt)))
        u, d, ratios, failure = _iterate(g, c, specs, T_cur, T_cur / steps, idx, tol, max_iter, initial)
        rep.d, rep.ratios = d, ratios
        if failure is None:
            rep.converged, rep.T_star = True, T_cur
            res, qn = pde_residual(u, c, specs)
            rep.residual = res / qn if qn > 0 else res
            return u, rep
        rep.attempts.append((T_cur, failure))
        T_cur /= 2
    raise NoConvergenceError(f"no contraction down to T_min = {T_min:g}", rep)


def uniqueness_probe(g: Field, c: Coefficients, spec, T: float = 0.1, dt: float = 1e-3, tol: float = 1e-8,
                     starts=("datum", "perturbed"), **kw) -> dict:
    """Relative X_T distance from the fixed point reached from ``W g`` to those from other starts.

    The constant extension of ``g`` has ``f~ = 0``, so its first iterate is
    already ``W g``; the ``perturbed`` start is a genuinely different iterate.
    """
    a, ra = solve_nonlinear(g, c, spec, T, dt, tol, initial="propagated", **kw)
    idx = kw.get("idx") or select_indices(c.sigma, c.p)
    scale = xt_norm(a, idx).value
    out = {}
    for start in starts:
        b, _ = solve_nonlinear(g, c, spec, ra.T_star, dt, tol, initial=start, **kw)
        out[start] = xt_norm(_difference(a, b), idx).value / scale if scale > 0 else 0.0
    return out


def mass(u) -> complex:
    vals = u.values if isinstance(u, Field) else np.asarray(u)
    grid = u.grid if isinstance(u, Field) else None
    if grid is None:
        raise InvalidInputError("mass needs a Field")
    return complex(grid.dx * np.sum(vals))


# --------------------------------------------------------------------------- lemma checks

@dataclass
class LemmaReport:
    C_a: float
    lhs_a: float
    rhs_a: float
    C_b: tuple | None
    fit_exists: bool
    s: float
    weight: int

    @property
    def passed(self) -> bool:
        return math.isfinite(self.C_a) and self.fit_exists


def lemma_a_constant(traj: Trajectory, g: Field, idx: IndexSelection, spec, T: float | None = None) -> tuple:
    """Empirical constant of the forcing bound: ``(C, LHS, T ||u||^2 (||u||^{2d} + ||g||^{2d}))``."""
    T = traj.T if T is None else T
    K = int(np.searchsorted(traj.times, T + 1e-12))
    grid, p = traj.grid, idx.p
    spec_f = NormSpec(idx.m - (p - 1) / 2, idx.sigma / 2)
    ft = np.array([_split_values(grid, u, g.values, spec) for u in traj.values[:K]])
    lhs = float(cumulative_time_integral(squared_norms(grid, ft, spec_f), traj.times[:K])[-1]) if K > 1 else 0.0
    X = xt_norm(traj, idx, T).value
    deg = max(s.degree for s in _specs(spec))
    G = math.sqrt(float(squared_norms(grid, g.values, NormSpec(idx.m, 0))))
    rhs = T * X ** 2 * (X ** (2 * deg) + G ** (2 * deg))
    if lhs == 0:
        return 0.0, lhs, rhs
    return (lhs / rhs if rhs > 0 else math.inf), lhs, rhs


def lemma_b_fit(c: Coefficients, h_suite, s: float, weight: int, T: float, dt: float = 1e-3,
                horizons: int = 4) -> tuple[tuple | None, bool]:
    """Nonnegative ``C_j`` with ``sup_t ||W h||^2_{s,n} <= ||h||^2_{s,n} + sum_j C_j T'^j ||h||^2_{s+j(p-1),n-j}``.

    Constraints are imposed for every datum and every horizon ``T' = T k / horizons``.
    """
    p = c.p
    rows, rhs_vals = [], []
    trivial_ok = True
    for h in h_suite:
        steps = max(1, int(round(T / dt)))
        traj = _integrate(c, h.values, h.grid, None, 0.0, T, T / steps)
        lhs_t = squared_norms(h.grid, traj.values, NormSpec(s, weight))
        base = float(squared_norms(h.grid, h.values, NormSpec(s, weight)))
        B = [float(squared_norms(h.grid, h.values, NormSpec(s + j * (p - 1), weight - j)))
             for j in range(1, weight + 1)]
        for k in range(1, horizons + 1):
            Tk = T * k / horizons
            K = int(np.searchsorted(traj.times, Tk + 1e-12))
            excess = (float(np.max(lhs_t[:K])) - base) / base
            if weight == 0:
                trivial_ok &= excess <= 1e-10
                continue
            rows.append([-(Tk ** j) * B[j - 1] / base for j in range(1, weight + 1)])
            rhs_vals.append(-excess)
    if weight == 0:
        return (), bool(trivial_ok)
    A = np.array(rows)
    scale = np.max(np.abs(A), axis=0)
    scale[scale == 0] = 1.0
    res = linprog(np.ones(weight), A_ub=A / scale, b_ub=np.array(rhs_vals), bounds=[(0, None)] * weight,
                  method="highs")
    if not res.success:
        return None, False
    return tuple(float(v) for v in res.x / scale), True


def lemma_checks(traj: Trajectory, g: Field, idx: IndexSelection, spec, T: float | None = None,
                 h_suite=None, s: float = 2.0, weight: int = 2, dt: float | None = None) -> LemmaReport:
    """Empirical constants of the nonlinear forcing bound and the weighted propagator bound."""
    T = traj.T if T is None else T
    C_a, lhs, rhs = lemma_a_constant(traj, g, idx, spec, T)
    C_b, ok = (None, True)
    if h_suite is not None:
        C_b, ok = lemma_b_fit(traj.coefficients, h_suite, s, weight, T, dt or traj.dt)
    return LemmaReport(C_a, lhs, rhs, C_b, ok, s, weight)
