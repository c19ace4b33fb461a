# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, pow, cos, sin

cnp.import_array()

cdef double[5] _NODES
cdef double[5] _WEIGHTS
_n, _w = np.polynomial.legendre.leggauss(5)
for _i in range(5):
    _NODES[_i] = _n[_i]
    _WEIGHTS[_i] = _w[_i]


cdef inline double _ramp(double t) nogil:
    cdef double z
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    z = 1.0 / t - 1.0 / (1.0 - t)
    if z > 700.0:
        return 0.0
    return 1.0 / (1.0 + exp(z))


cdef inline double _integrand(double y, double R, double exponent) nogil:
    cdef double jb = sqrt(1.0 + y * y)
    cdef double r = _ramp(2.0 * (1.0 - jb / R))
    if r == 0.0:
        return 0.0
    return pow(jb, -exponent) * r


def ramp(t):
    t = np.asarray(t, dtype=float)
    flat = np.ascontiguousarray(t).ravel()
    cdef const double[::1] tv = flat
    out = np.empty(flat.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(tv.shape[0]):
        ov[i] = _ramp(tv[i])
    return out.reshape(t.shape)


def weighted_cutoff_integrand(y, R, exponent):
    y, R = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(R, dtype=float))
    yf = np.ascontiguousarray(y).ravel()
    Rf = np.ascontiguousarray(R).ravel()
    cdef const double[::1] yv = yf
    cdef const double[::1] Rv = Rf
    out = np.empty(yf.shape[0])
    cdef double[::1] ov = out
    cdef double ex = exponent
    cdef Py_ssize_t i
    for i in range(yv.shape[0]):
        ov[i] = _integrand(yv[i], Rv[i], ex)
    return out.reshape(y.shape)


def cumulative_weighted_integral(R, exponent, double dy, Py_ssize_t npanels):
    Rarr = np.ascontiguousarray(np.atleast_1d(np.asarray(R, dtype=float)))
    cdef const double[::1] Rv = Rarr
    out = np.zeros((Rarr.shape[0], npanels + 1))
    cdef double[:, ::1] ov = out
    cdef double ex = exponent
    cdef double acc, left, panel
    cdef Py_ssize_t i, k, q
    with nogil:
        for i in range(Rv.shape[0]):
            acc = 0.0
            for k in range(npanels):
                left = k * dy
                if left * left + 1.0 >= Rv[i] * Rv[i]:
                    # <y> >= R from here on: the cutoff vanishes
                    for q in range(k + 1, npanels + 1):
                        ov[i, q] = acc
                    break
                panel = 0.0
                for q in range(5):
                    panel += _WEIGHTS[q] * _integrand(left + 0.5 * dy * (_NODES[q] + 1.0), Rv[i], ex)
                acc += 0.5 * dy * panel
                ov[i, k + 1] = acc
    return out


def partial_weighted_integral(R, exponent, a, b):
    R, a, b = np.broadcast_arrays(
        np.asarray(R, dtype=float), np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    )
    shape = R.shape
    cdef const double[::1] Rv = np.ascontiguousarray(R).ravel()
    cdef const double[::1] av = np.ascontiguousarray(a).ravel()
    cdef const double[::1] bv = np.ascontiguousarray(b).ravel()
    out = np.empty(Rv.shape[0])
    cdef double[::1] ov = out
    cdef double ex = exponent
    cdef double half, mid, acc
    cdef Py_ssize_t i, q
    with nogil:
        for i in range(Rv.shape[0]):
            half = 0.5 * (bv[i] - av[i])
            mid = 0.5 * (bv[i] + av[i])
            acc = 0.0
            for q in range(5):
                acc += _WEIGHTS[q] * _integrand(mid + half * _NODES[q], Rv[i], ex)
            ov[i] = half * acc
    return out.reshape(shape)


def kn_apply(P, x, xi, uhat):
    Parr = np.ascontiguousarray(P, dtype=complex)
    cdef const double complex[:, ::1] Pv = Parr
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=float)
    cdef const double[::1] kv = np.ascontiguousarray(xi, dtype=float)
    cdef const double complex[::1] uv = np.ascontiguousarray(uhat, dtype=complex)
    cdef Py_ssize_t n = Pv.shape[0], m = Pv.shape[1], j, k
    out = np.empty(n, dtype=complex)
    cdef double complex[::1] ov = out
    cdef double complex acc, term
    cdef double ang
    with nogil:
        for j in range(n):
            acc = 0.0
            for k in range(m):
                ang = xv[j] * kv[k]
                term = Pv[j, k] * uv[k]
                acc = acc + term * (cos(ang) + 1j * sin(ang))
            ov[j] = acc
    return out
