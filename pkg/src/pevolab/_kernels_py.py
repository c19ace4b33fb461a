"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_kernels.pyx`` must agree with them to
rounding error. ``pevolab.kernels`` picks whichever is available.
"""
import numpy as np

# 5-point Gauss-Legendre rule on [-1, 1]
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def ramp(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, smooth in between."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    inside = (t > 0.0) & (t < 1.0)
    if np.any(inside):
        ti = t[inside]
        with np.errstate(over="ignore"):
            out[inside] = 1.0 / (1.0 + np.exp(1.0 / ti - 1.0 / (1.0 - ti)))
    return out


def weighted_cutoff_integrand(y, R, exponent):
    """<y>^(-exponent) * psi(<y>/R), the integrand of the lambda symbols."""
    jb = np.sqrt(1.0 + y * y)
    return jb ** (-exponent) * ramp(2.0 * (1.0 - jb / R))


def cumulative_weighted_integral(R, exponent, dy, npanels):
    """Table T[i, k] = int_0^{k dy} <y>^(-exponent) psi(<y>/R[i]) dy.

    Composite 5-point Gauss-Legendre on panels of width ``dy``.
    """
    R = np.atleast_1d(np.asarray(R, dtype=float))
    left = np.arange(npanels) * dy
    nodes = left[:, None] + 0.5 * dy * (GL_NODES[None, :] + 1.0)
    out = np.zeros((R.size, npanels + 1))
    for i, r in enumerate(R):
        vals = weighted_cutoff_integrand(nodes, r, exponent)
        out[i, 1:] = np.cumsum(0.5 * dy * (vals @ GL_WEIGHTS))
    return out


def partial_weighted_integral(R, exponent, a, b):
    """Elementwise int_{a_i}^{b_i} of the integrand for R_i (short intervals)."""
    R, a, b = np.broadcast_arrays(
        np.asarray(R, dtype=float), np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    )
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[..., None] + half[..., None] * GL_NODES
    vals = weighted_cutoff_integrand(nodes, R[..., None], exponent)
    return half * (vals @ GL_WEIGHTS)


def kn_apply(P, x, xi, uhat):
    """out[j] = sum_k P[j, k] exp(i x_j xi_k) uhat[k]."""
    phase = np.exp(1j * np.outer(x, xi))
    return (np.asarray(P) * phase) @ np.asarray(uhat, dtype=complex)
