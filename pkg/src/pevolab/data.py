"""Seeded test data: Gaussians, wave packets, random Schwartz and band-limited fields.

Every random generator takes a ``numpy.random.Generator`` so one recorded seed
reproduces a whole suite.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .grid import Field, Grid1D


def gaussian(grid: Grid1D, amplitude=1.0, width=1.0, center=0.0, xi0=0.0) -> Field:
    """``amplitude * exp(-((x - center)/width)^2) * exp(i xi0 x)``."""
    x = grid.x
    return Field(grid, amplitude * np.exp(-(((x - center) / width) ** 2)) * np.exp(1j * xi0 * x))


def random_schwartz(grid: Grid1D, rng: np.random.Generator, n_bumps: int = 3,
                    spread: float = 4.0, real: bool = False, width_range=(0.7, 2.0)) -> Field:
    """Sum of modulated Gaussian bumps with random centers, widths and phases."""
    x = grid.x
    u = np.zeros(grid.N, dtype=complex)
    for _ in range(n_bumps):
        c = rng.uniform(-spread, spread)
        w = rng.uniform(*width_range)
        amp = rng.normal() + (0 if real else 1j * rng.normal())
        xi0 = 0.0 if real else rng.uniform(-2.0, 2.0)
        u += amp * np.exp(-(((x - c) / w) ** 2)) * np.exp(1j * xi0 * x)
    return Field(grid, u)


def random_band_limited(grid: Grid1D, rng: np.random.Generator, n_modes: int = 8,
                        xi_cut: float = 4.0, width: float = 4.0) -> Field:
    """Gaussian-windowed random trigonometric sum with frequencies ``|xi| <= xi_cut``.

    The spectrum is negligible beyond ``xi_cut + 8/width`` and the field is
    negligible near the box edge for the default box.
    """
    x = grid.x
    freqs = rng.uniform(-xi_cut, xi_cut, size=n_modes)
    coefs = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    envelope = np.exp(-((x / width) ** 2))
    u = envelope * (np.exp(1j * np.outer(x, freqs)) @ coefs)
    return Field(grid, u)


class TimeForcing:
    """``f(t, x) = sum_k cos(omega_k t + phi_k) b_k(x)`` with Schwartz profiles ``b_k``."""

    def __init__(self, profiles, omegas, phases, scale=1.0):
        self.profiles = [np.asarray(b, dtype=complex) for b in profiles]
        self.omegas = np.asarray(omegas, dtype=float)
        self.phases = np.asarray(phases, dtype=float)
        self.scale = scale

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros_like(self.profiles[0])
        for b, w, ph in zip(self.profiles, self.omegas, self.phases):
            out += np.cos(w * t + ph) * b
        return self.scale * out

    def scaled(self, alpha: float) -> "TimeForcing":
        return TimeForcing(self.profiles, self.omegas, self.phases, self.scale * alpha)


def random_forcing(grid: Grid1D, rng: np.random.Generator, n_terms: int = 2, **params) -> TimeForcing:
    profiles = [random_schwartz(grid, rng, **params).values for _ in range(n_terms)]
    return TimeForcing(profiles, rng.uniform(0.0, 10.0, n_terms), rng.uniform(0.0, 2 * np.pi, n_terms))


def make_datum(name: str, grid: Grid1D, rng: np.random.Generator | None = None, **params) -> Field:
    """Datum presets used by the experiment runner."""
    rng = rng if rng is not None else np.random.default_rng(0)
    if name == "gaussian":
        return gaussian(grid, **params)
    if name == "packet":
        params.setdefault("xi0", 10.0)
        return gaussian(grid, **params)
    if name == "schwartz":
        return random_schwartz(grid, rng, **params)
    if name == "bandlimited":
        return random_band_limited(grid, rng, **params)
    raise ParameterError(f"unknown datum preset {name!r}")


def schwartz_suite(grid: Grid1D, seed: int, count: int = 10, **params) -> list[Field]:
    rng = np.random.default_rng(seed)
    return [random_schwartz(grid, rng, **params) for _ in range(count)]


def forcing_suite(grid: Grid1D, seed: int, count: int = 10, **params) -> list[TimeForcing]:
    rng = np.random.default_rng(seed)
    return [random_forcing(grid, rng, **params) for _ in range(count)]


def band_limited_suite(grid: Grid1D, seed: int, count: int = 10, **params) -> list[Field]:
    rng = np.random.default_rng(seed)
    return [random_band_limited(grid, rng, **params) for _ in range(count)]
