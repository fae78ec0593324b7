# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the charge solver and the point-source Duhamel integral.

Same contracts as :mod:`impurity_nls._kernels_py`.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, M_PI
from scipy.special.cython_special cimport wofz

from ._kernels_py import ChargeNonconvergenceError, abel_linear_weights

cnp.import_array()

# residual beyond which the iteration is declared divergent
cdef double _DIVERGED = 1e50

cdef extern from "<complex.h>" nogil:
    double complex cexp(double complex)
    double complex csqrt(double complex)
    double cabs(double complex)


def solve_charge(f, double complex kappa, double delta, double damping, double tol, int max_iter):
    cdef cnp.ndarray[cnp.complex128_t] fa = np.ascontiguousarray(f, dtype=np.complex128)
    cdef Py_ssize_t n_max = fa.shape[0] - 1
    left_np, right_np = abel_linear_weights(n_max, delta)
    cdef double[::1] left = left_np
    cdef double[::1] right = right_np
    cdef double[::1] comb = np.zeros(n_max + 1)
    cdef cnp.ndarray[cnp.complex128_t] q_np = np.empty(n_max + 1, dtype=np.complex128)
    cdef cnp.ndarray[cnp.int64_t] it_np = np.zeros(n_max + 1, dtype=np.int64)
    cdef double complex[::1] q = q_np
    cdef double complex[::1] g = np.empty(n_max + 1, dtype=np.complex128)
    cdef cnp.int64_t[::1] iters = it_np
    cdef Py_ssize_t n, k, it
    cdef double complex hist, base, z, res, self_w
    cdef double az
    cdef bint ok

    for n in range(1, n_max):
        comb[n] = left[n] + right[n + 1]
    if n_max == 0:
        q[0] = fa[0]
        return q_np, it_np
    q[0] = fa[0]
    g[0] = cabs(q[0]) ** 2 * q[0]
    self_w = kappa * right[1]
    for n in range(1, n_max + 1):
        hist = left[n] * g[0]
        for k in range(1, n):
            hist = hist + comb[n - k] * g[k]
        base = fa[n] + kappa * hist
        z = 2.0 * q[n - 1] - q[n - 2] if n > 1 else q[0]
        ok = False
        for it in range(1, max_iter + 1):
            az = cabs(z)
            res = base + self_w * (az * az * z) - z
            if cabs(res) <= tol * (az if az > 1.0 else 1.0):
                ok = True
                break
            if not cabs(res) < _DIVERGED:
                break
            z = z + damping * res
        if not ok:
            raise ChargeNonconvergenceError(
                f"charge iteration did not converge at node {n} (residual {cabs(res):.3e}); "
                f"reduce the mesh step (delta={delta})"
            )
        iters[n] = it
        q[n] = z
        az = cabs(z)
        g[n] = az * az * z
    return q_np, it_np


cdef inline void _antiderivatives(double a, double r, double complex *p0, double complex *p1) noexcept nogil:
    cdef double sr = sqrt(r)
    cdef double complex root, phase
    if a == 0.0:
        p0[0] = 2.0 * sr
        p1[0] = (2.0 / 3.0) * r * sr
        return
    if r == 0.0:
        p0[0] = 0.0
        p1[0] = 0.0
        return
    root = csqrt(-1j * a)
    phase = cexp(1j * a / r)
    p0[0] = phase * (2.0 * sr - 2.0 * sqrt(M_PI) * root * wofz(1j * root / sr))
    p1[0] = (2.0 / 3.0) * r * sr * phase + (2.0 / 3.0) * 1j * a * p0[0]


cdef double complex _point_source_at(double a, const double complex[::1] gs, Py_ssize_t n, double delta) noexcept nogil:
    cdef Py_ssize_t m
    cdef double complex p0_lo = 0.0, p1_lo = 0.0, p0_hi, p1_hi, d0, d1, slope
    cdef double complex acc = 0.0
    for m in range(1, n + 1):
        # lag m covers r in [(m-1) delta, m delta], density nodes n-m and n-m+1
        _antiderivatives(a, m * delta, &p0_hi, &p1_hi)
        d0 = p0_hi - p0_lo
        d1 = p1_hi - p1_lo
        slope = (m * delta * d0 - d1) / delta
        acc = acc + (d0 - slope) * gs[n - m] + slope * gs[n - m + 1]
        p0_lo = p0_hi
        p1_lo = p1_hi
    return acc


def duhamel_point_source(x, g, double delta):
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double complex[::1] gs = np.ascontiguousarray(g, dtype=np.complex128)
    cdef Py_ssize_t n = gs.shape[0] - 1
    cdef Py_ssize_t nx = xs.shape[0]
    out_np = np.zeros(nx, dtype=np.complex128)
    cdef double complex[::1] out = out_np
    cdef Py_ssize_t i
    cdef double a
    if n == 0:
        return out_np
    for i in prange(nx, nogil=True, schedule="static"):
        a = 0.25 * xs[i] * xs[i]
        out[i] = _point_source_at(a, gs, n, delta)
    return out_np
