"""Kohn-Nirenberg quantization on the grid and inversion of the conjugator.

``op(p) u (x_j) = sum_k exp(i x_j xi_k) p(x_j, xi_k) uhat_k`` with the
normalization of :mod:`pevolab.grid`. At the Nyquist column the symbol is
replaced by the average of its values at ``+xi_N`` and ``-xi_N``, the same rule
used for Fourier multipliers, so x-independent symbols reduce to
``fourier_multiplier`` and xi-independent symbols to pointwise products.

The right (reverse) quantization evaluates the symbol at the source point::

    op_R(q) u (x_j) = sum_k exp(i x_j xi_k) (1/N) sum_l exp(-i xi_k x_l) q(x_l, xi_k) u_l
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .data import band_limited_suite
from .errors import DivergenceError, DomainError, InvalidInputError, ParameterError
from .grid import Field, Grid1D, l2_norm_values
from .symbols import SGSymbol, exp_lambda, finite_difference

MAX_DENSE_N = 1024


@dataclass(eq=False)
class OperatorMatrix:
    grid: Grid1D
    matrix: np.ndarray = field(repr=False)
    provenance: str = ""
    symbol: SGSymbol | None = field(default=None, repr=False)
    info: dict = field(default_factory=dict)

    def apply(self, u: Field) -> Field:
        if u.grid != self.grid:
            raise InvalidInputError("operator and field live on different grids")
        return Field(self.grid, self.matrix @ u.values)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.grid, self.matrix @ other.matrix,
                                  f"({self.provenance})({other.provenance})")
        if isinstance(other, Field):
            return self.apply(other)
        return self.matrix @ other


def symbol_values(sym: SGSymbol, grid: Grid1D) -> np.ndarray:
    """Grid samples ``S[j, k] = p(x_j, xi_k)`` with the Nyquist column symmetrized."""
    vals = np.array(sym.on_grid(grid), dtype=complex)
    ny = grid.nyquist
    xn = grid.xi[ny]
    both = sym.on_grid(grid, np.array([xn, -xn]))
    vals[:, ny] = 0.5 * (both[:, 0] + both[:, 1])
    if not np.all(np.isfinite(vals)):
        j, k = np.argwhere(~np.isfinite(vals))[0]
        raise DomainError(f"{sym.name} is not finite at x = {float(grid.x[j])!r}, xi = {float(grid.xi[k])!r}")
    return vals


def _phase(grid: Grid1D) -> np.ndarray:
    return np.exp(1j * np.outer(grid.x, grid.xi))


def dft_matrix(grid: Grid1D) -> np.ndarray:
    """``F`` with ``F @ u == grid.fft(u)``."""
    return np.exp(-1j * np.outer(grid.xi, grid.x)) / grid.N


def apply_kn(sym: SGSymbol, u: Field) -> Field:
    grid = u.grid
    P = symbol_values(sym, grid)
    return Field(grid, kernels.kn_apply(P, grid.x, grid.xi, grid.fft(u.values)))


def _guard(grid: Grid1D):
    if grid.N > MAX_DENSE_N:
        raise ParameterError(f"dense operator matrices are limited to N <= {MAX_DENSE_N}, got N = {grid.N}")


def operator_matrix(sym: SGSymbol, grid: Grid1D) -> OperatorMatrix:
    """Dense matrix of ``op(sym)``; column j is ``apply_kn`` of the j-th unit sample."""
    _guard(grid)
    S = symbol_values(sym, grid)
    if np.all(S == S[0, 0]):  # constant symbol: a scalar operator, assembled exactly
        return OperatorMatrix(grid, S[0, 0] * np.eye(grid.N, dtype=complex), f"op({sym.name})", sym)
    K = (S * _phase(grid)) @ dft_matrix(grid)
    return OperatorMatrix(grid, K, f"op({sym.name})", sym)


def right_operator_matrix(sym: SGSymbol, grid: Grid1D) -> OperatorMatrix:
    """Dense matrix of the right quantization ``op_R(sym)``."""
    _guard(grid)
    Q = symbol_values(sym, grid)  # Q[l, k] = q(x_l, xi_k)
    if np.all(Q == Q[0, 0]):
        return OperatorMatrix(grid, Q[0, 0] * np.eye(grid.N, dtype=complex), f"op_R({sym.name})", sym)
    K = _phase(grid) @ (Q.T * dft_matrix(grid))
    return OperatorMatrix(grid, K, f"op_R({sym.name})", sym)


def operator_norm(A) -> float:
    M = A.matrix if isinstance(A, OperatorMatrix) else np.asarray(A)
    return float(np.linalg.norm(M, 2))


def default_test_fields(grid: Grid1D, count: int = 10, seed: int = 7) -> list[Field]:
    return band_limited_suite(grid, seed, count)


def identity_defect(A: np.ndarray, B: np.ndarray, fields) -> float:
    """max over fields of ``||A B u - u|| / ||u||``."""
    worst = 0.0
    for u in fields:
        r = A @ (B @ u.values) - u.values
        worst = max(worst, l2_norm_values(u.grid, r) / l2_norm_values(u.grid, u.values))
    return worst


def invert_conjugator(E: OperatorMatrix, mode: str = "direct", Lam: SGSymbol | None = None,
                      test_fields=None, series_tol: float = 1e-16, max_terms: int = 500) -> OperatorMatrix:
    """Inverse of ``op(exp(Lambda))``.

    ``direct`` solves densely. ``neumann`` uses the reverse operator
    ``op_R(exp(-Lambda))`` and the series ``sum_j (-r)^j`` with
    ``r = op(exp(Lambda)) op_R(exp(-Lambda)) - I``; it refuses with
    :class:`DivergenceError` when the contraction indicator ``rho = ||r||_2``
    is not below 1. Both modes report the identity defect on ``test_fields``.
    """
    grid = E.grid
    n = grid.N
    fields = test_fields if test_fields is not None else default_test_fields(grid)
    eye = np.eye(n)
    info = {"mode": mode}
    if mode == "direct":
        inv = np.linalg.solve(E.matrix, eye)
    elif mode == "neumann":
        if Lam is None:
            Lam = (E.symbol.params.get("Lambda") if E.symbol is not None else None)
        if Lam is None:
            raise ParameterError("neumann mode needs the Lambda symbol that built E")
        rev = right_operator_matrix(exp_lambda(Lam, -1), grid).matrix
        r = E.matrix @ rev - eye
        rho = operator_norm(r)
        info["rho"] = rho
        if not rho < 1:
            raise DivergenceError(
                f"Neumann series indicator rho = {rho:.4g} >= 1; increase h "
                "(the conjugator is invertible this way only for h above a threshold)"
            )
        series = eye.astype(complex)
        term = eye.astype(complex)
        nterms = 1
        while nterms < max_terms:
            term = -(r @ term)
            series += term
            nterms += 1
            if rho ** nterms < series_tol:
                break
        info["terms"] = nterms
        inv = rev @ series
    else:
        raise ParameterError(f"unknown inversion mode {mode!r}")
    info["defect"] = identity_defect(E.matrix, inv, fields)
    info["defect_op"] = operator_norm(E.matrix @ inv - eye)
    return OperatorMatrix(grid, inv, f"inverse[{mode}]({E.provenance})", None, info)


def conjugator(Lam: SGSymbol, grid: Grid1D) -> OperatorMatrix:
    E = operator_matrix(exp_lambda(Lam, 1), grid)
    E.symbol.params["Lambda"] = Lam
    return E


def neumann_indicator(Lam: SGSymbol, grid: Grid1D) -> float:
    E = operator_matrix(exp_lambda(Lam, 1), grid).matrix
    rev = right_operator_matrix(exp_lambda(Lam, -1), grid).matrix
    return operator_norm(E @ rev - np.eye(grid.N))


@dataclass
class CompositionReport:
    defect_1: np.ndarray
    defect_2: np.ndarray

    @property
    def ordered(self) -> bool:
        return bool(np.all(self.defect_2 < self.defect_1))


def composition_defect(psym: SGSymbol, qsym: SGSymbol, test_fields) -> CompositionReport:
    """Relative defects of the one- and two-term composition expansions.

    ``defect_1 = ||op(p)op(q)u - op(pq)u|| / ||u||`` and ``defect_2`` adds the
    correction ``op(-i d_xi p d_x q)`` with central differences at grid spacing.
    """
    fields = list(test_fields)
    grid = fields[0].grid
    dx, dxi = grid.dx, grid.dxi
    prod = SGSymbol(lambda x, xi: psym(x, xi) * qsym(x, xi), name=f"{psym.name}*{qsym.name}")
    corr = SGSymbol(
        lambda x, xi: psym(x, xi) * qsym(x, xi)
        - 1j * finite_difference(psym, 1, 0, x, xi, dx, dxi) * finite_difference(qsym, 0, 1, x, xi, dx, dxi),
        name="two-term",
    )
    d1, d2 = [], []
    for u in fields:
        lhs = apply_kn(psym, apply_kn(qsym, u)).values
        nu = l2_norm_values(grid, u.values)
        d1.append(l2_norm_values(grid, lhs - apply_kn(prod, u).values) / nu)
        d2.append(l2_norm_values(grid, lhs - apply_kn(corr, u).values) / nu)
    return CompositionReport(np.array(d1), np.array(d2))


def h_sweep(make_lambda, hs, grid: Grid1D, test_fields=None) -> list[dict]:
    """Neumann indicator and inverse defect for each ``h``; ``make_lambda(h)`` builds Lambda."""
    rows = []
    for h in hs:
        Lam = make_lambda(h)
        E = conjugator(Lam, grid)
        row = {"h": h}
        try:
            inv = invert_conjugator(E, "neumann", Lam, test_fields)
            row.update(rho=inv.info["rho"], defect=inv.info["defect"], converged=True)
        except DivergenceError:
            row.update(rho=neumann_indicator(Lam, grid), defect=float("nan"), converged=False)
        rows.append(row)
    return rows
