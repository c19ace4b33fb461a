"""Periodic grid on a truncated line, discrete Fourier transforms and multipliers.

Conventions
-----------
The box is ``[-L, L)`` sampled at ``x_k = -L + 2 L k / N``. Frequencies are
``xi = (pi / L) * k'`` with ``k'`` in ``[-N/2, N/2)``, stored in numpy FFT
order (``k' = 0, 1, ..., N/2 - 1, -N/2, ..., -1``); the Nyquist mode sits at
storage index ``N/2`` and carries ``k' = -N/2``.

The transform is normalized so that the sampled plane wave ``exp(i xi_k x)``
has exactly one unit coefficient::

    uhat[k] = (1/N) sum_j u[j] exp(-i xi_k x_j),   u[j] = sum_k uhat[k] exp(i xi_k x_j)

Parseval then reads ``sum |u_j|^2 dx = 2 L sum |uhat_k|^2``.

The Nyquist mode cannot distinguish ``+xi_N`` from ``-xi_N`` on the grid, so a
multiplier ``m`` acts on it through ``(m(xi_N) + m(-xi_N)) / 2``. For Hermitian
multipliers (``m(-xi) = conj m(xi)``) this is ``Re m(xi_N)``, which keeps real
data real.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DomainError, InvalidInputError, ParameterError

BOUNDARY_MASS_THRESHOLD = 1e-8


class BoundaryMassWarning(UserWarning):
    """A field has non-negligible mass near the edge of the periodic box."""


@dataclass(frozen=True)
class Grid1D:
    L: float = 40.0
    N: int = 512

    def __post_init__(self):
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 16 and self.N % 2 == 0):
            raise InvalidInputError(f"grid.N must be even and >= 16, got {self.N!r}")
        if not (np.isfinite(self.L) and self.L > 0):
            raise InvalidInputError(f"grid.L must be positive, got {self.L!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def dxi(self) -> float:
        return np.pi / self.L

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L + self.dx * np.arange(self.N)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers k' in storage order."""
        k = np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)
        k.flags.writeable = False
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        xi = self.dxi * self.k
        xi.flags.writeable = False
        return xi

    @property
    def nyquist(self) -> int:
        return self.N // 2

    @property
    def xi_max(self) -> float:
        return self.dxi * self.N / 2

    @cached_property
    def _shift(self) -> np.ndarray:
        # exp(i xi_k L) = (-1)^k' accounts for the box starting at -L
        s = np.where(self.k % 2 == 0, 1.0, -1.0)
        s.flags.writeable = False
        return s

    # array-level transforms, last axis is space / frequency
    def fft(self, values):
        return np.fft.fft(values, axis=-1) * (self._shift / self.N)

    def ifft(self, coeffs):
        return np.fft.ifft(np.asarray(coeffs) * self._shift, axis=-1) * self.N

    def multiplier_values(self, m) -> np.ndarray:
        """Sample a multiplier on the grid frequencies, Nyquist symmetrized."""
        if callable(m):
            vals = np.asarray(m(self.xi), dtype=complex)
            if vals.ndim == 0:
                vals = np.full(self.N, complex(vals))
            vals = np.array(np.broadcast_to(vals, (self.N,)), dtype=complex)
            vals[self.nyquist] = 0.5 * (complex(m(np.array([self.xi[self.nyquist]]))[0])
                                        + complex(m(np.array([-self.xi[self.nyquist]]))[0]))
        else:
            vals = np.array(np.broadcast_to(np.asarray(m, dtype=complex), (self.N,)))
        bad = ~np.isfinite(vals)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise DomainError(f"multiplier is not finite at xi = {float(self.xi[i])!r} (k' = {self.k[i]})")
        return vals

    def apply_multiplier(self, values, mvals):
        return self.ifft(self.fft(values) * mvals)


def _checked_values(grid: Grid1D, values) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.ndim != 1 or arr.shape[0] != grid.N:
        raise InvalidInputError(f"expected {grid.N} samples, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("samples must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a function on a Grid1D. Immutable."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _checked_values(self.grid, self.values))

    @classmethod
    def from_function(cls, grid: Grid1D, fn) -> "Field":
        return cls(grid, fn(np.asarray(grid.x)))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "Field":
        return cls(grid, np.zeros(grid.N, dtype=complex))

    def _other(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise InvalidInputError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._other(other))

    def __mul__(self, other):
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients indexed by k' in storage order."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _checked_values(self.grid, self.values))


def dft(u: Field) -> Spectrum:
    return Spectrum(u.grid, u.grid.fft(u.values))


def idft(s: Spectrum) -> Field:
    return Field(s.grid, s.grid.ifft(s.values))


def fourier_multiplier(u: Field, m) -> Field:
    """Apply the Fourier multiplier ``m(xi)`` (a callable or grid-sampled array)."""
    mvals = u.grid.multiplier_values(m)
    return Field(u.grid, u.grid.apply_multiplier(u.values, mvals))


def bracket(v, h=1.0):
    """Modified Japanese bracket ``(h^2 + v^2)^(1/2)``; ``h = 1`` gives <v>."""
    if np.any(np.asarray(h) < 1):
        raise ParameterError(f"bracket parameter h must be >= 1, got {h!r}")
    v = np.asarray(v, dtype=float)
    out = np.sqrt(np.asarray(h, dtype=float) ** 2 + v * v)
    return float(out) if out.ndim == 0 else out


def japanese(v):
    """<v> = (1 + v^2)^(1/2) without parameter checks."""
    v = np.asarray(v, dtype=float)
    return np.sqrt(1.0 + v * v)


def l2_norm_values(grid: Grid1D, values) -> float:
    return float(np.sqrt(grid.dx * np.sum(np.abs(values) ** 2)))


def boundary_mass(u: Field) -> float:
    """max |u| over the outer 10% of the box divided by the L2 norm."""
    norm = l2_norm_values(u.grid, u.values)
    if norm == 0.0:
        return 0.0
    outer = np.abs(u.grid.x) >= 0.9 * u.grid.L
    return float(np.max(np.abs(u.values[outer])) / norm)


def check_boundary_mass(u: Field, threshold: float = BOUNDARY_MASS_THRESHOLD) -> float:
    bm = boundary_mass(u)
    if bm > threshold:
        warnings.warn(
            f"boundary mass {bm:.3e} exceeds {threshold:.1e}; box truncation may be visible",
            BoundaryMassWarning,
            stacklevel=2,
        )
    return bm


def write_snapshot(path, u: Field, t: float = 0.0) -> None:
    """Write ``PEVO1 N L t`` then one ``x re im`` line per sample."""
    g = u.grid
    lines = [f"PEVO1 {g.N} {g.L:.17g} {t:.17g}"]
    lines.extend(
        f"{x:.17g} {v.real:.17g} {v.imag:.17g}" for x, v in zip(g.x, u.values)
    )
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> tuple[Field, float]:
    text = Path(path).read_text().split("\n")
    head = text[0].split()
    if len(head) != 4 or head[0] != "PEVO1":
        raise InvalidInputError(f"{path}: not a PEVO1 snapshot")
    n, L, t = int(head[1]), float(head[2]), float(head[3])
    rows = [ln.split() for ln in text[1:] if ln.strip()]
    if len(rows) != n:
        raise InvalidInputError(f"{path}: header says {n} samples, found {len(rows)}")
    data = np.array(rows, dtype=float)
    return Field(Grid1D(L, n), data[:, 1] + 1j * data[:, 2]), t
