"""Weighted Kato-Sobolev norms ``H^{s1,s2}`` on the grid.

``||u||_{s1,s2} = || <x>^{s2} <D>_h^{s1} u ||_{L2}``: the Fourier multiplier is
applied first, then the pointwise weight, then the rectangle rule (spectrally
accurate for periodic data). The weight uses the box coordinate directly, which
is faithful as long as the boundary mass of ``u`` is negligible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ParameterError, PreconditionError
from .grid import Field, Grid1D, japanese


@dataclass(frozen=True)
class NormSpec:
    s1: float = 0.0
    s2: float = 0.0
    h: float = 1.0

    def __post_init__(self):
        if self.h < 1:
            raise ParameterError(f"NormSpec.h must be >= 1, got {self.h!r}")


def _as_spec(spec) -> NormSpec:
    if isinstance(spec, NormSpec):
        return spec
    return NormSpec(*spec)


def derivative_weight(grid: Grid1D, s1: float, h: float = 1.0) -> np.ndarray:
    """Samples of ``<xi>_h^{s1}`` on the grid (even, so no Nyquist ambiguity)."""
    return (h * h + grid.xi ** 2) ** (0.5 * s1)


def spatial_weight(grid: Grid1D, s2: float) -> np.ndarray:
    return japanese(grid.x) ** s2


def weighted_values(grid: Grid1D, values, spec) -> np.ndarray:
    """``<x>^{s2} <D>_h^{s1} u`` for one field or a stack of fields (last axis space)."""
    spec = _as_spec(spec)
    out = np.asarray(values, dtype=complex)
    if spec.s1 != 0:
        out = grid.apply_multiplier(out, derivative_weight(grid, spec.s1, spec.h))
    if spec.s2 != 0:
        out = out * spatial_weight(grid, spec.s2)
    return out


def weighted_values_alt(grid: Grid1D, values, spec) -> np.ndarray:
    """``<D>_h^{s1} (<x>^{s2} u)``: weight first."""
    spec = _as_spec(spec)
    out = np.asarray(values, dtype=complex)
    if spec.s2 != 0:
        out = out * spatial_weight(grid, spec.s2)
    if spec.s1 != 0:
        out = grid.apply_multiplier(out, derivative_weight(grid, spec.s1, spec.h))
    return out


def squared_norms(grid: Grid1D, values, spec) -> np.ndarray:
    """Squared weighted norms of a stack of fields, shape ``values.shape[:-1]``."""
    w = weighted_values(grid, values, spec)
    return grid.dx * np.sum(np.abs(w) ** 2, axis=-1)


def _scaled_l2(grid: Grid1D, w: np.ndarray) -> float:
    # rescale by the peak so tiny or huge amplitudes neither underflow nor overflow
    a = np.abs(w)
    peak = float(a.max()) if a.size else 0.0
    if peak == 0.0 or not np.isfinite(peak):
        return peak
    return peak * float(np.sqrt(grid.dx * np.sum((a / peak) ** 2)))


def weighted_norm(u: Field, spec=NormSpec()) -> float:
    return _scaled_l2(u.grid, weighted_values(u.grid, u.values, spec))


def weighted_norm_alt(u: Field, spec=NormSpec()) -> float:
    return _scaled_l2(u.grid, weighted_values_alt(u.grid, u.values, spec))


def l2_inner(u: Field, v: Field) -> complex:
    """``sum u conj(v) dx``: linear in ``u``, conjugate-linear in ``v``."""
    if u.grid != v.grid:
        raise InvalidInputError("l2_inner: fields live on different grids")
    return complex(u.grid.dx * np.vdot(v.values, u.values))


def algebra_defect(u: Field, v: Field, spec) -> float:
    """``||uv|| / (||u|| ||v||)`` in ``H^{s1,s2}``; 0 when either factor vanishes."""
    spec = _as_spec(spec)
    if spec.s1 <= 0.5:
        raise PreconditionError(f"algebra property needs s1 > 1/2, got s1 = {spec.s1}")
    if spec.s2 < 0:
        raise PreconditionError(f"algebra property needs s2 >= 0, got s2 = {spec.s2}")
    if u.grid != v.grid:
        raise InvalidInputError("algebra_defect: fields live on different grids")
    nu, nv = weighted_norm(u, spec), weighted_norm(v, spec)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return weighted_norm(u * v, spec) / (nu * nv)


def time_integral(values, times) -> float:
    """Trapezoidal integral of a sampled time series."""
    return float(np.trapezoid(np.asarray(values, dtype=float), np.asarray(times, dtype=float)))


def cumulative_time_integral(values, times) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    times = np.asarray(times, dtype=float)
    out = np.zeros_like(values)
    if values.size > 1:
        out[1:] = np.cumsum(0.5 * np.diff(times) * (values[1:] + values[:-1]))
    return out
