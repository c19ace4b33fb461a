"""SG symbols used to conjugate the evolution operator.

Cutoffs
-------
Both cutoffs use the standard smooth ramp ``s(t) = phi(t) / (phi(t) + phi(1-t))``
with ``phi(t) = exp(-1/t)`` for ``t > 0``:

* ``psi(y) = s(2 (1 - |y|))``: 1 on ``|y| <= 1/2``, 0 on ``|y| >= 1``, and
  ``psi(3/4) = 1/2`` exactly.
* ``omega(y) = -sign(y)^(p-1) s(|y| - 1)``: 0 on ``|y| <= 1`` and
  ``-|y|^(p-1) / y^(p-1)`` on ``|y| >= 2``.

The lambda symbols
------------------
::

    lambda_{p-1}(x, xi) = M_{p-1} omega(xi/h) int_0^x <y>^-sigma psi(<y> / <xi>_h^(p-1)) dy
    lambda_{p-j}(x, xi) = M_{p-j} omega(xi/h) <xi>_h^(1-j)
                          int_0^x <y>^(-(p-j)/(p-1)) psi(<y> / <xi>_h^(p-1)) dy,  2 <= j <= p-1

The x-integral is tabulated once per distinct ``<xi>_h`` on panels of width
``dy`` with a 5-point Gauss-Legendre rule, and completed on the last partial
panel with the same rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, ParameterError
from .grid import Grid1D, bracket, japanese

DEFAULT_DY = 0.0390625  # a quarter of the default grid spacing 80/512


def smooth_ramp(t):
    return kernels.ramp(np.asarray(t, dtype=float))


def cutoff_psi(y):
    """Plateau cutoff: 1 for |y| <= 1/2, 0 for |y| >= 1, values in [0, 1]."""
    y = np.asarray(y, dtype=float)
    out = smooth_ramp(2.0 * (1.0 - np.abs(y)))
    return float(out) if out.ndim == 0 else out


def cutoff_omega(y, p: int):
    """0 for |y| <= 1 and -(|y|^(p-1) / y^(p-1)) for |y| >= 2."""
    if p < 2:
        raise ParameterError(f"cutoff_omega needs p >= 2, got {p}")
    y = np.asarray(y, dtype=float)
    sgn = np.where(y < 0, -1.0, 1.0) ** (p - 1)
    out = -sgn * smooth_ramp(np.abs(y) - 1.0)
    return float(out) if out.ndim == 0 else out


class SGSymbol:
    """A symbol ``(x, xi) -> complex`` with declared SG orders ``(m1, m2)``.

    ``fn`` must broadcast over numpy arrays.
    """

    def __init__(self, fn: Callable, orders=(0.0, 0.0), params=None, name: str = "symbol"):
        self.fn = fn
        self.orders = tuple(float(o) for o in orders)
        self.params = dict(params or {})
        self.name = name
        self._grid_cache: dict = {}

    def __call__(self, x, xi):
        x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        return np.asarray(self.fn(x, xi), dtype=complex) * np.ones(x.shape)

    def on_grid(self, grid: Grid1D, xi=None) -> np.ndarray:
        """Matrix ``S[j, k] = sym(x_j, xi_k)`` (grid frequencies by default)."""
        if xi is not None:
            return self(grid.x[:, None], np.asarray(xi)[None, :])
        if grid not in self._grid_cache:
            vals = self(grid.x[:, None], grid.xi[None, :])
            bad = ~np.isfinite(vals)
            if np.any(bad):
                j, k = np.argwhere(bad)[0]
                raise DomainError(
                    f"{self.name} is not finite at x = {float(grid.x[j])!r}, xi = {float(grid.xi[k])!r}"
                )
            vals.flags.writeable = False
            self._grid_cache[grid] = vals
        return self._grid_cache[grid]

    def __repr__(self):
        return f"SGSymbol({self.name!r}, orders={self.orders})"


def constant_symbol(value=1.0) -> SGSymbol:
    return SGSymbol(lambda x, xi: np.full(np.shape(x), complex(value)), (0, 0), name=f"const({value})")


def multiplier_symbol(m: Callable, order: float = 0.0, name="multiplier") -> SGSymbol:
    """x-independent symbol ``m(xi)``."""
    return SGSymbol(lambda x, xi: m(xi) * np.ones(np.shape(x)), (order, 0), name=name)


def multiplication_symbol(a: Callable, order: float = 0.0, name="multiplication") -> SGSymbol:
    """xi-independent symbol ``a(x)``."""
    return SGSymbol(lambda x, xi: a(x) * np.ones(np.shape(xi)), (0, order), name=name)


class _CumulativeTable:
    """Tabulated ``I_R(a) = int_0^a <y>^-e psi(<y>/R) dy`` for many R at once."""

    def __init__(self, exponent: float, dy: float):
        self.exponent = float(exponent)
        self.dy = float(dy)
        self._tables: dict[float, np.ndarray] = {}
        self._npanels = 0

    def _ensure(self, radii: np.ndarray, amax: float):
        need = int(np.ceil(amax / self.dy)) + 2
        if need > self._npanels:
            # regrow every table so all share one length
            self._npanels = max(need, 2 * self._npanels)
            keys = np.array(sorted(self._tables), dtype=float)
            self._tables.clear()
            radii = np.union1d(radii, keys)
        missing = np.array([r for r in radii if r not in self._tables], dtype=float)
        if missing.size:
            tab = kernels.cumulative_weighted_integral(missing, self.exponent, self.dy, self._npanels)
            for r, row in zip(missing, tab):
                row.flags.writeable = False
                self._tables[float(r)] = row

    def __call__(self, R: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Integral up to ``a >= 0`` for paired ``R`` values (flat arrays)."""
        out = np.zeros(a.shape)
        if a.size == 0:
            return out
        uniq, inv = np.unique(R, return_inverse=True)
        self._ensure(uniq, float(a.max()))
        k = np.floor(a / self.dy).astype(int)
        stacked = np.stack([self._tables[float(r)] for r in uniq])
        out = stacked[inv, k]
        rem = a - k * self.dy
        part = rem > 0
        if np.any(part):
            out = out.copy()
            out[part] += kernels.partial_weighted_integral(
                R[part], self.exponent, k[part] * self.dy, a[part]
            )
        return out


@dataclass(frozen=True)
class LambdaParams:
    """Constants of the conjugating symbols.

    ``M`` lists ``(M_{p-1}, M_{p-2}, ..., M_1)``; missing trailing entries are 0.
    """

    p: int
    sigma: float
    h: float = 1.0
    M: tuple = field(default=())
    dy: float = DEFAULT_DY

    def __post_init__(self):
        if self.p < 2:
            raise ParameterError(f"p must be >= 2, got {self.p}")
        if not self.sigma > 1:
            raise ParameterError(f"sigma must be > 1, got {self.sigma}")
        if self.h < 1:
            raise ParameterError(f"h must be >= 1, got {self.h}")
        M = tuple(float(m) for m in self.M)
        if len(M) > self.p - 1:
            raise ParameterError(f"at most p-1 = {self.p - 1} constants M, got {len(M)}")
        object.__setattr__(self, "M", M + (0.0,) * (self.p - 1 - len(M)))

    def M_level(self, j: int) -> float:
        """Constant of lambda_{p-j}."""
        return self.M[j - 1]


class LambdaSymbol(SGSymbol):
    """lambda_{p-j} for ``j = 1`` (top level) or ``2 <= j <= p-1``."""

    def __init__(self, j: int, M: float, p: int, h: float, sigma: float | None = None,
                 dy: float = DEFAULT_DY):
        if p < 2:
            raise ParameterError(f"p must be >= 2, got {p}")
        if h < 1:
            raise ParameterError(f"h must be >= 1, got {h}")
        if j == 1:
            if sigma is None or not sigma > 1:
                raise ParameterError(f"lambda_(p-1) needs sigma > 1, got {sigma}")
            exponent = float(sigma)
        elif 2 <= j <= p - 1:
            exponent = (p - j) / (p - 1)
        else:
            raise ParameterError(f"level j must lie in 1..{p - 1}, got {j}")
        if M < 0:
            raise ParameterError(f"M must be >= 0, got {M}")
        self.j, self.M, self.p, self.h, self.sigma = j, float(M), int(p), float(h), sigma
        self.exponent = exponent
        self._table = _CumulativeTable(exponent, dy)
        params = {"p": p, "h": h, "sigma": sigma, "M": M, "j": j, "dy": dy}
        super().__init__(self._evaluate, (0, 0), params, name=f"lambda_{p - j}")

    def _evaluate(self, x, xi):
        shape = x.shape
        x = x.ravel()
        xi = xi.ravel()
        out = np.zeros(x.shape)
        active = (np.abs(xi) > self.h) & (x != 0) & (self.M != 0)
        if np.any(active):
            xa, xia = x[active], xi[active]
            jb = bracket(xia, self.h)
            R = jb ** (self.p - 1)
            integral = self._table(R, np.abs(xa)) * np.sign(xa)
            factor = self.M * cutoff_omega(xia / self.h, self.p)
            if self.j > 1:
                factor = factor * jb ** (1 - self.j)
            out[active] = factor * integral
        return out.reshape(shape)


def lambda_top(M: float, sigma: float, h: float, p: int, dy: float = DEFAULT_DY) -> LambdaSymbol:
    return LambdaSymbol(1, M, p, h, sigma=sigma, dy=dy)


def lambda_lower(j: int, M: float, h: float, p: int, dy: float = DEFAULT_DY) -> LambdaSymbol:
    if not 2 <= j <= p - 1:
        raise ParameterError(f"lambda_lower needs 2 <= j <= p-1 = {p - 1}, got {j}")
    return LambdaSymbol(j, M, p, h, dy=dy)


def lambda_terms(params: LambdaParams) -> list[LambdaSymbol]:
    terms = [lambda_top(params.M_level(1), params.sigma, params.h, params.p, params.dy)]
    terms += [lambda_lower(j, params.M_level(j), params.h, params.p, params.dy)
              for j in range(2, params.p)]
    return terms


def capital_lambda(params_or_terms) -> SGSymbol:
    """Lambda = lambda_1 + ... + lambda_{p-1}, from LambdaParams or a list of terms."""
    if isinstance(params_or_terms, LambdaParams):
        terms = lambda_terms(params_or_terms)
    else:
        terms = list(params_or_terms)
    if not terms:
        raise ParameterError("capital_lambda needs at least one term")
    ps = {t.params.get("p") for t in terms}
    hs = {t.params.get("h") for t in terms}
    if len(ps) != 1 or len(hs) != 1:
        raise ParameterError(f"lambda terms disagree on p or h: p in {ps}, h in {hs}")

    def fn(x, xi):
        return sum(t(x, xi) for t in terms)

    sym = SGSymbol(fn, (0, 0), {"p": ps.pop(), "h": hs.pop(), "terms": terms}, name="Lambda")

    def on_grid(grid, xi=None, _sym=sym):
        if xi is not None:
            return sum(t.on_grid(grid, xi) for t in terms)
        if grid not in _sym._grid_cache:
            vals = sum(t.on_grid(grid) for t in terms)
            vals.flags.writeable = False
            _sym._grid_cache[grid] = vals
        return _sym._grid_cache[grid]

    sym.on_grid = on_grid
    return sym


def exp_lambda(Lam: SGSymbol, sign: int = 1) -> SGSymbol:
    """Pointwise ``exp(sign * Lambda)``."""
    if sign not in (1, -1):
        raise ParameterError(f"sign must be +1 or -1, got {sign}")
    sym = SGSymbol(lambda x, xi: np.exp(sign * Lam(x, xi)), (0, 0),
                   {**Lam.params, "sign": sign}, name=f"exp({'+' if sign > 0 else '-'}Lambda)")

    def on_grid(grid, xi=None, _sym=sym):
        if xi is not None:
            return np.exp(sign * Lam.on_grid(grid, xi))
        if grid not in _sym._grid_cache:
            vals = np.exp(sign * Lam.on_grid(grid))
            vals.flags.writeable = False
            _sym._grid_cache[grid] = vals
        return _sym._grid_cache[grid]

    sym.on_grid = on_grid
    return sym


# central difference stencils: offsets and weights for derivative orders 0..3
_STENCILS = {
    0: ((0,), (1.0,)),
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
}


def finite_difference(sym: SGSymbol, alpha: int, beta: int, x, xi, dx: float, dxi: float):
    """Central-difference estimate of d_xi^alpha d_x^beta sym at (x, xi)."""
    offx, wx = _STENCILS[beta]
    offk, wk = _STENCILS[alpha]
    total = 0.0
    for ox, cx in zip(offx, wx):
        for ok, ck in zip(offk, wk):
            total = total + cx * ck * sym(x + ox * dx, xi + ok * dxi)
    return total / (dx ** beta * dxi ** alpha)


@dataclass
class SymbolEstimateReport:
    constants: dict
    passed: bool
    depth: int

    def __str__(self):
        rows = [f"C[{a},{b}] = {c:.6g}" for (a, b), c in sorted(self.constants.items())]
        return "\n".join(rows + [f"PASS: {self.passed}"])


def declared_order_bound(sym: SGSymbol, h: float | None = None):
    m1, m2 = sym.orders
    hh = float(h if h is not None else sym.params.get("h") or 1.0)

    def bound(alpha, beta, x, xi):
        return bracket(xi, hh) ** (m1 - alpha) * japanese(x) ** (m2 - beta)

    return bound


def lambda_top_bound(M: float, sigma: float, h: float):
    """``M <xi>_h^-alpha <x>^(1 - sigma - beta)`` for beta >= 1, ``M <xi>_h^-alpha`` for beta = 0."""

    def bound(alpha, beta, x, xi):
        wx = japanese(x) ** (1 - sigma - beta) if beta > 0 else 1.0
        return M * bracket(xi, h) ** (-alpha) * wx

    return bound


def verify_symbol_estimates(sym: SGSymbol, depth: int = 2, grid: Grid1D | None = None,
                            bound=None, stride: int = 4) -> SymbolEstimateReport:
    """Empirical SG constants ``sup |d_xi^a d_x^b sym| / bound`` for ``a + b <= depth``.

    Derivatives are central differences with the grid spacings as steps; the
    sup runs over every ``stride``-th grid point away from the box edge.
    """
    if not 0 <= depth <= 3:
        raise ParameterError(f"depth must be in 0..3 (finite-difference budget), got {depth}")
    grid = grid or Grid1D()
    bound = bound or declared_order_bound(sym)
    margin = 3 * grid.dx
    xs = grid.x[(np.abs(grid.x) < grid.L - margin)][::stride]
    xis = np.sort(grid.xi)[2:-2][::stride]
    X, XI = np.meshgrid(xs, xis, indexing="ij")
    constants = {}
    for a in range(depth + 1):
        for b in range(depth + 1 - a):
            d = finite_difference(sym, a, b, X, XI, grid.dx, grid.dxi)
            bnd = np.broadcast_to(bound(a, b, X, XI), X.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(np.abs(d) == 0, 0.0, np.abs(d) / bnd)
            c = float(np.max(ratio))
            if not np.isfinite(c):
                raise DomainError(f"non-finite derivative estimate for (alpha, beta) = ({a}, {b})")
            constants[(a, b)] = c
    return SymbolEstimateReport(constants, True, depth)
