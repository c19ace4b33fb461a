"""Linear p-evolution Cauchy problems ``P u = f``, ``u(0) = g``.

``P = D_t + a_p(t) D_x^p + sum_{j<p} a_j(t, x) D_x^j`` with ``D = -i d``, so

    du/dt = -i a_p(t) D^p u - i sum_j a_j(t, x) D^j u + i f.

``D^j`` is the Fourier multiplier ``xi^j``. The stiff leading term is removed
with the exact integrating factor ``exp(-i xi^p int a_p)`` (Simpson in time) and
the remainder is advanced with classical RK4 in Lawson form.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import BlowUpError, InvalidInputError, ParameterError, PreconditionError, StabilityError
from .grid import BOUNDARY_MASS_THRESHOLD, BoundaryMassWarning, Field, Grid1D, japanese, write_snapshot

BLOWUP_FACTOR = 1e6


def _zero(t, x):
    return np.zeros(np.shape(x), dtype=complex)


@dataclass(frozen=True)
class Coefficients:
    """Coefficients of ``P``.

    ``lower`` maps ``j`` to a callable ``a_j(t, x)``. ``constants`` holds the
    declared hypothesis constants keyed by ``"ap"`` (the lower bound of a_p),
    an integer ``j`` (``C_j``) or ``"C"`` (the constant of the a_1/a_2 condition).
    """

    p: int
    a_p: Callable[[float], float]
    lower: dict = field(default_factory=dict)
    sigma: float = 2.0
    constants: dict = field(default_factory=dict)
    name: str = "custom"
    compliant: bool = True
    x_independent: bool = False
    time_independent: bool = True
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.p < 2:
            raise ParameterError(f"p must be >= 2, got {self.p}")
        bad = [j for j in self.lower if not 0 <= j <= self.p - 1]
        if bad:
            raise ParameterError(f"lower-order levels must lie in 0..{self.p - 1}, got {bad}")

    def a(self, j: int, t: float, x) -> np.ndarray:
        fn = self.lower.get(j, _zero)
        return np.asarray(fn(t, x), dtype=complex) * np.ones(np.shape(x))

    def with_extra(self, j: int, values: np.ndarray, grid: Grid1D) -> "Coefficients":
        """Add a time-independent grid-sampled term at level ``j``."""
        old = self.lower.get(j, _zero)
        extra = np.asarray(values, dtype=complex)
        xs = np.asarray(grid.x)

        def fn(t, x, _old=old, _extra=extra):
            if np.shape(x) == xs.shape and np.array_equal(x, xs):
                return _old(t, x) + _extra
            return _old(t, x) + np.interp(x, xs, _extra.real) + 1j * np.interp(x, xs, _extra.imag)

        lower = dict(self.lower)
        lower[j] = fn
        return replace(self, lower=lower, name=f"{self.name}+extra[{j}]", x_independent=False)


# --------------------------------------------------------------------------- presets

def preset_coefficients(name: str, **params) -> Coefficients:
    """Named coefficient sets.

    ``const``      a_p = ap (optionally ``ap * (1 + wobble sin 2 pi t)``), rest 0
    ``decay3``     p = 3, a_2 = i gamma <x>^-sigma, a_1 = i gamma1 <x>^-1/2, a_0 = a0 <x>^-2
    ``kawahara5``  p = 5, a_5 = b, a_3 = a
    ``illposed3``  p = 3, a_2 = i gamma (violates the decay hypothesis)
    """
    if name == "const":
        p = int(params.get("p", 3))
        ap = float(params.get("ap", 1.0))
        wobble = float(params.get("wobble", 0.0))
        if wobble:
            a_p = lambda t: ap * (1.0 + wobble * math.sin(2 * math.pi * t))
        else:
            a_p = lambda t: ap
        consts = {"ap": 0.5 * ap * (1 - abs(wobble)), p - 1: 0.0, "C": 0.0}
        return Coefficients(p, a_p, {}, float(params.get("sigma", 2.0)), consts, "const",
                            True, True, wobble == 0.0, {"p": p, "ap": ap, "wobble": wobble})
    if name == "decay3":
        gamma = float(params.get("gamma", 0.5))
        sigma = float(params.get("sigma", 2.0))
        gamma1 = float(params.get("gamma1", 0.1))
        a0 = float(params.get("a0", 0.1))
        lower = {
            2: lambda t, x: 1j * gamma * japanese(x) ** (-sigma),
            1: lambda t, x: 1j * gamma1 * japanese(x) ** (-0.5),
            0: lambda t, x: a0 * japanese(x) ** (-2.0),
        }
        consts = {"ap": 0.5, 2: gamma, "C": gamma1}
        return Coefficients(3, lambda t: 1.0, lower, sigma, consts, "decay3", True, False, True,
                            {"gamma": gamma, "sigma": sigma, "gamma1": gamma1, "a0": a0})
    if name == "kawahara5":
        a = float(params.get("a", 1.0))
        b = float(params.get("b", 1.0))
        if b <= 0:
            raise ParameterError(f"kawahara5 needs b > 0, got {b}")
        lower = {3: lambda t, x: a + 0j}
        consts = {"ap": 0.5 * b, 4: 0.0, 3: abs(a), "C": 0.0}
        return Coefficients(5, lambda t: b, lower, float(params.get("sigma", 2.0)), consts,
                            "kawahara5", True, True, True, {"a": a, "b": b})
    if name == "illposed3":
        gamma = float(params.get("gamma", 0.5))
        lower = {2: lambda t, x: 1j * gamma + 0 * x}
        consts = {"ap": 0.5, 2: gamma, "C": 0.0}
        return Coefficients(3, lambda t: 1.0, lower, float(params.get("sigma", 2.0)), consts,
                            "illposed3", False, True, True, {"gamma": gamma})
    raise ParameterError(f"unknown coefficient preset {name!r}")


PRESETS = ("const", "decay3", "kawahara5", "illposed3")


# --------------------------------------------------------------------------- hypotheses

@dataclass
class ConditionResult:
    name: str
    passed: bool
    constant: float
    declared: float | None
    witness_x: float
    witness_t: float

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        dec = "-" if self.declared is None else f"{self.declared:.6g}"
        return (f"{status} {self.name}: empirical {self.constant:.6g}, declared {dec}, "
                f"worst x = {self.witness_x:.4g}, t = {self.witness_t:.4g}")


@dataclass
class HypothesisReport:
    conditions: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def failed(self) -> list:
        return [c.name for c in self.conditions if not c.passed]

    def __str__(self):
        lines = [str(c) for c in self.conditions]
        lines.append("all PASS" if self.passed else f"FAILED: {', '.join(self.failed())}")
        return "\n".join(lines)


def _derivative_samples(grid: Grid1D, values: np.ndarray, beta: int) -> np.ndarray:
    if beta == 0:
        return values
    return grid.apply_multiplier(values, grid.multiplier_values(lambda xi: xi ** beta))


def check_hypotheses(c: Coefficients, grid: Grid1D | None = None, T: float = 1.0,
                     n_times: int = 5) -> HypothesisReport:
    """Evaluate every applicable decay / boundedness hypothesis on the grid.

    Each condition ``|LHS| <= C <x>^-rate`` reports ``sup |LHS| <x>^rate`` and
    passes when it does not exceed the declared constant. Without a declared
    constant it passes when the sup over the whole box does not exceed the sup
    over the inner half (i.e. the decay rate is attained).
    """
    grid = grid or Grid1D()
    p = c.p
    ts = np.linspace(0.0, T, n_times)
    x = np.asarray(grid.x)
    jx = japanese(x)
    inner = np.abs(x) <= 0.5 * grid.L
    samples = {j: np.array([c.a(j, t, x) for t in ts]) for j in range(p)}
    results = []

    def judge(name, lhs, rate, key):
        weighted = np.abs(lhs) * jx ** rate
        it, ix = np.unravel_index(int(np.argmax(weighted)), weighted.shape)
        K = float(weighted[it, ix])
        declared = c.constants.get(key)
        if declared is not None:
            ok = K <= float(declared) * (1 + 1e-9) + 1e-14
        else:
            ok = K <= float(np.max(weighted[:, inner])) * (1 + 1e-4) + 1e-14
        results.append(ConditionResult(name, bool(ok), K, declared, float(x[ix]), float(ts[it])))

    ap_vals = np.array([c.a_p(t) for t in ts], dtype=float)
    Cap = c.constants.get("ap")
    imin = int(np.argmin(ap_vals))
    ok = bool(np.all(np.isreal(ap_vals)) and ap_vals.min() > (Cap if Cap is not None else 0.0)
              and (Cap is None or Cap > 0))
    results.append(ConditionResult("a_p > C_ap > 0", ok, float(ap_vals.min()), Cap, float("nan"), float(ts[imin])))

    judge(f"|Im a_{p-1}| <= C_{p-1} <x>^-sigma", samples[p - 1].imag, c.sigma, p - 1)
    for j in range(3, p - 1):
        judge(f"|Im a_{j}| <= C_{j} <x>^-{j}/{p-1}", samples[j].imag, j / (p - 1), j)
    for j in range(3, p):
        for beta in range(0, j):
            d = np.array([_derivative_samples(grid, s, beta) for s in samples[j]])
            judge(f"|Re D^{beta} a_{j}| <= C_{j}", d.real, 0.0, j)
        for beta in range(2, 2 * j):
            d = np.array([_derivative_samples(grid, s, beta) for s in samples[j]])
            judge(f"|Im D^{beta} a_{j}| <= C_{j} <x>^-({j}-{beta // 2})/{p-1}",
                  d.imag, (j - beta // 2) / (p - 1), j)
    if p >= 3:
        judge(f"|Im a_2| <= C_2 <x>^-2/{p-1}", samples[2].imag, 2 / (p - 1), 2)
        da2 = np.array([_derivative_samples(grid, s, 1) for s in samples[2]]).imag
    else:
        da2 = np.zeros_like(samples[1].real)
    judge(f"|Im a_1| + |Im D a_2| <= C <x>^-1/{p-1}",
          np.abs(samples[1].imag) + np.abs(da2), 1 / (p - 1), "C")
    return HypothesisReport(results)


# --------------------------------------------------------------------------- right-hand side

class _Operator:
    """Grid realization of the spatial part of ``P`` (cached multipliers)."""

    def __init__(self, c: Coefficients, grid: Grid1D):
        self.c, self.grid = c, grid
        self.levels = sorted(c.lower)
        self.powers = {j: grid.multiplier_values(lambda xi, j=j: xi ** j) for j in self.levels}
        self.lead = grid.multiplier_values(lambda xi: xi ** c.p).real
        self._static = {}
        if c.time_independent:
            self._static = {j: c.a(j, 0.0, np.asarray(grid.x)) for j in self.levels}

    def coeff(self, j, t):
        if j in self._static:
            return self._static[j]
        return self.c.a(j, t, np.asarray(self.grid.x))

    def lower_apply(self, t, uhat):
        """``sum_j a_j(t, x) D^j u`` in physical space from ``uhat``."""
        out = np.zeros(self.grid.N, dtype=complex)
        for j in self.levels:
            out += self.coeff(j, t) * self.grid.ifft(self.powers[j] * uhat)
        return out

    def spatial_apply(self, t, u):
        """``a_p D^p u + sum_j a_j D^j u``."""
        uhat = self.grid.fft(u)
        return self.c.a_p(t) * self.grid.ifft(self.lead * uhat) + self.lower_apply(t, uhat)

    def stability_bound(self, t0, t1) -> float:
        xi_max = self.grid.xi_max
        worst = 0.0
        for t in np.linspace(t0, t1, 3):
            for j in self.levels:
                worst = max(worst, float(np.max(np.abs(self.coeff(j, t)))) * xi_max ** j)
        return math.inf if worst == 0 else 0.5 / worst


def _forcing_values(f, t, grid):
    if f is None:
        return None
    val = f(t) if callable(f) else f
    if val is None:
        return None
    if isinstance(val, Field):
        val = val.values
    return np.asarray(val, dtype=complex)


def rhs_apply(c: Coefficients, t: float, u: Field, f=None) -> Field:
    """``du/dt = -i (a_p D^p + sum a_j D^j) u + i f``."""
    grid = u.grid
    out = -1j * _Operator(c, grid).spatial_apply(t, u.values)
    fv = _forcing_values(f, t, grid)
    if fv is not None:
        out = out + 1j * fv
    return Field(grid, out)


# --------------------------------------------------------------------------- time stepping

def _simpson(fn, a, b):
    return (b - a) / 6.0 * (fn(a) + 4.0 * fn(0.5 * (a + b)) + fn(b))


class _Stepper:
    def __init__(self, c: Coefficients, grid: Grid1D, f=None):
        self.op = _Operator(c, grid)
        self.c, self.grid, self.f = c, grid, f

    def nonlinear_hat(self, t, uhat):
        out = -1j * self.op.lower_apply(t, uhat)
        fv = _forcing_values(self.f, t, self.grid)
        if fv is not None:
            out = out + 1j * fv
        return self.grid.fft(out)

    def factor(self, t0, t1):
        return np.exp(-1j * self.op.lead * _simpson(self.c.a_p, t0, t1))

    def step_hat(self, uhat, t, dt):
        if dt == 0:
            return uhat
        h = 0.5 * dt
        Ea = self.factor(t, t + h)
        Eb = self.factor(t + h, t + dt)
        E1 = Ea * Eb
        k1 = self.nonlinear_hat(t, uhat)
        k2 = self.nonlinear_hat(t + h, Ea * (uhat + h * k1))
        k3 = self.nonlinear_hat(t + h, Ea * uhat + h * k2)
        k4 = self.nonlinear_hat(t + dt, E1 * uhat + dt * Eb * k3)
        return E1 * uhat + dt / 6.0 * (E1 * k1 + 2.0 * Eb * (k2 + k3) + k4)

    def full_derivative(self, t, u):
        out = -1j * self.op.spatial_apply(t, u)
        fv = _forcing_values(self.f, t, self.grid)
        if fv is not None:
            out = out + 1j * fv
        return out


def step_ifrk4(u: Field, t: float, dt: float, c: Coefficients, f=None) -> Field:
    """One integrating-factor RK4 step of size ``dt`` from time ``t``."""
    if dt < 0:
        raise ParameterError(f"dt must be >= 0, got {dt}")
    st = _Stepper(c, u.grid, f)
    if dt > 0:
        bound = st.op.stability_bound(t, t + dt)
        if dt > bound:
            raise StabilityError(f"dt = {dt:.4g} exceeds the stability bound {bound:.4g}")
    else:
        return Field(u.grid, u.values)
    return Field(u.grid, u.grid.ifft(st.step_hat(u.grid.fft(u.values), t, dt)))


# --------------------------------------------------------------------------- trajectories

@dataclass(eq=False)
class Trajectory:
    """Snapshots ``u(t_k)`` on one grid with uniform spacing.

    ``dudt`` holds the time derivative from the equation at each snapshot when
    the trajectory was produced by a solver; it enables Hermite interpolation.
    """

    grid: Grid1D
    times: np.ndarray
    values: np.ndarray = field(repr=False)
    coefficients: Coefficients | None = None
    forcing: object = None
    dudt: np.ndarray | None = field(default=None, repr=False)
    boundary_mass: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.times.size, self.grid.N):
            raise InvalidInputError(f"trajectory values have shape {self.values.shape}, "
                                    f"expected {(self.times.size, self.grid.N)}")

    def __len__(self):
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def field(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    @property
    def final(self) -> Field:
        return self.field(-1)

    def index_of(self, t: float) -> int:
        k = int(round((t - self.times[0]) / self.dt)) if self.dt else 0
        if not (0 <= k < len(self) and abs(self.times[k] - t) <= 1e-9 * max(1.0, abs(t))):
            raise InvalidInputError(f"t = {t} is not a snapshot time of the trajectory")
        return k

    def at(self, t: float) -> np.ndarray:
        """Samples at any ``t`` in range: exact at snapshots, cubic Hermite between."""
        t0, t1 = self.times[0], self.times[-1]
        if not (t0 - 1e-12 <= t <= t1 + 1e-12):
            raise InvalidInputError(f"t = {t} outside trajectory range [{t0}, {t1}]")
        if len(self) == 1:
            return self.values[0]
        s = (t - t0) / self.dt
        k = min(int(np.floor(s + 1e-12)), len(self) - 2)
        theta = s - k
        if abs(theta) < 1e-12:
            return self.values[k]
        if abs(theta - 1) < 1e-12:
            return self.values[k + 1]
        u0, u1 = self.values[k], self.values[k + 1]
        if self.dudt is None:
            return (1 - theta) * u0 + theta * u1
        d0, d1 = self.dudt[k] * self.dt, self.dudt[k + 1] * self.dt
        h00 = 2 * theta ** 3 - 3 * theta ** 2 + 1
        h10 = theta ** 3 - 2 * theta ** 2 + theta
        h01 = -2 * theta ** 3 + 3 * theta ** 2
        h11 = theta ** 3 - theta ** 2
        return h00 * u0 + h10 * d0 + h01 * u1 + h11 * d1


def _integrate(c: Coefficients, g: np.ndarray, grid: Grid1D, f, t0: float, t1: float,
               dt: float, store: bool = True, guard: bool = True) -> Trajectory:
    span = t1 - t0
    if span < 0:
        raise ParameterError(f"final time {t1} precedes start time {t0}")
    nsteps = int(round(span / dt)) if span > 0 else 0
    if nsteps and abs(nsteps * dt - span) > 1e-9 * max(1.0, span):
        raise ParameterError(f"time span {span} is not a whole number of steps of {dt}")
    if nsteps:
        dt = span / nsteps
    st = _Stepper(c, grid, f)
    if nsteps:
        bound = st.op.stability_bound(t0, t1)
        if dt > bound * (1 + 1e-12):
            raise StabilityError(f"dt = {dt:.4g} exceeds the stability bound {bound:.4g} "
                                 "(0.5 / max_j max|a_j| xi_max^j)")
    g = np.asarray(g, dtype=complex)
    g_norm = float(np.sqrt(grid.dx * np.sum(np.abs(g) ** 2)))
    nstore = nsteps + 1 if store else 2
    times = t0 + dt * np.arange(nsteps + 1) if store else np.array([t0, t1])
    values = np.empty((nstore, grid.N), dtype=complex)
    dudt = np.empty((nstore, grid.N), dtype=complex)
    values[0] = g
    dudt[0] = st.full_derivative(t0, g)
    uhat = grid.fft(g)
    outer = np.abs(grid.x) >= 0.9 * grid.L
    bmass = 0.0
    for n in range(nsteps):
        t = t0 + n * dt
        uhat = st.step_hat(uhat, t, dt)
        if store or n == nsteps - 1:
            u = grid.ifft(uhat)
            slot = n + 1 if store else 1
            values[slot] = u
            dudt[slot] = st.full_derivative(t + dt, u)
            norm = float(np.sqrt(grid.dx * np.sum(np.abs(u) ** 2)))
            if guard and norm > BLOWUP_FACTOR * max(g_norm, 1e-300) and g_norm > 0:
                raise BlowUpError(
                    f"||u(t)|| = {norm:.3e} exceeds {BLOWUP_FACTOR:.0e} ||g|| at t = {t + dt:.4g}"
                )
            if norm > 0:
                bmass = max(bmass, float(np.max(np.abs(u[outer]))) / norm)
    if store and nsteps == 0:
        times = np.array([t0])
        values, dudt = values[:1], dudt[:1]
    if g_norm > 0:
        bmass = max(bmass, float(np.max(np.abs(g[outer]))) / g_norm)
    return Trajectory(grid, times, values, c, f, dudt, bmass)


def solve_linear(c: Coefficients, g: Field, f=None, T: float = 0.1, dt: float = 1e-3,
                 allow_illposed: bool = False) -> Trajectory:
    """Solve ``P u = f``, ``u(0) = g`` on ``[0, T]``, storing every step.

    ``f`` is ``None``, a Field / array (time-independent), or a callable of t.
    Coefficient sets that fail :func:`check_hypotheses` are refused unless
    ``allow_illposed`` is set.
    """
    grid = g.grid
    if not allow_illposed:
        report = check_hypotheses(c, grid, T=max(T, 1e-12))
        if not report.passed:
            raise PreconditionError(
                f"coefficients {c.name!r} fail {report.failed()}; pass allow_illposed=True to run anyway"
            )
    traj = _integrate(c, g.values, grid, f, 0.0, T, dt)
    if traj.boundary_mass > BOUNDARY_MASS_THRESHOLD:
        warnings.warn(f"boundary mass reached {traj.boundary_mass:.3e} during the solve",
                      BoundaryMassWarning, stacklevel=2)
    return traj


def propagator(c: Coefficients, tau: float, t: float, h: Field, dt: float = 1e-3) -> Field:
    """``W(t, tau) h``: the homogeneous solution at ``t`` started from ``h`` at ``tau``."""
    if tau > t:
        raise ParameterError(f"propagator needs tau <= t, got tau = {tau}, t = {t}")
    if t == tau:
        return Field(h.grid, h.values)
    n = max(1, int(math.ceil((t - tau) / dt - 1e-9)))
    traj = _integrate(c, h.values, h.grid, None, tau, t, (t - tau) / n, store=False)
    return Field(h.grid, traj.values[-1])


def exact_constant_solution(c: Coefficients, g: Field, t: float) -> Field:
    """Closed-form solution for x-independent coefficients without forcing."""
    if not c.x_independent:
        raise PreconditionError("exact_constant_solution needs x-independent coefficients")
    grid = g.grid
    lead = grid.multiplier_values(lambda xi: xi ** c.p).real
    A = _simpson_composite(c.a_p, 0.0, t)
    symbol = A * lead
    for j in c.lower:
        aj = complex(c.a(j, 0.0, np.zeros(1))[0])
        symbol = symbol + aj * t * grid.multiplier_values(lambda xi, j=j: xi ** j)
    return Field(grid, grid.ifft(np.exp(-1j * symbol) * grid.fft(g.values)))


def _simpson_composite(fn, a, b, n=64):
    if b == a:
        return 0.0
    xs = np.linspace(a, b, 2 * n + 1)
    ys = np.array([fn(s) for s in xs])
    h = (b - a) / (2 * n)
    return float(h / 3 * (ys[0] + ys[-1] + 4 * ys[1:-1:2].sum() + 2 * ys[2:-1:2].sum()))


def write_trajectory(traj: Trajectory, directory, stem: str = "u") -> Path:
    """One snapshot file per stored time plus ``manifest.txt`` lines ``k t file``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    width = max(5, len(str(len(traj) - 1)))
    for k, t in enumerate(traj.times):
        name = f"{stem}_{k:0{width}d}.pevo"
        write_snapshot(directory / name, traj.field(k), float(t))
        lines.append(f"{k} {float(t):.17g} {name}")
    manifest = directory / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest
