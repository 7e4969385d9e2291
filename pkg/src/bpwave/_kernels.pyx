# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: cyclic tridiagonal solve and periodic cubic interpolation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef void _thomas(const double[:] a, double[:] b, const double[:] c,
                  double[:] d, double[:] cp, Py_ssize_t n) noexcept nogil:
    # In-place Thomas sweep on a non-cyclic system; b and d are overwritten,
    # the solution is left in d.
    cdef Py_ssize_t i
    cdef double m
    cp[0] = c[0] / b[0]
    d[0] = d[0] / b[0]
    for i in range(1, n):
        m = b[i] - a[i] * cp[i - 1]
        cp[i] = c[i] / m
        d[i] = (d[i] - a[i] * d[i - 1]) / m
    for i in range(n - 2, -1, -1):
        d[i] = d[i] - cp[i] * d[i + 1]


def cyclic_tridiag_solve(lower, diag, upper, rhs):
    """Solve a periodic tridiagonal system.

    ``lower[i]`` multiplies ``x[i-1]`` and ``upper[i]`` multiplies ``x[i+1]``
    in row ``i``, indices taken modulo ``n``.
    """
    cdef double[:] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[:] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef Py_ssize_t n = lo.shape[0]
    cdef double[:] bb = np.array(diag, dtype=np.float64)
    cdef double[:] x = np.array(rhs, dtype=np.float64)
    cdef double[:] z = np.zeros(n, dtype=np.float64)
    cdef double[:] cp = np.empty(n, dtype=np.float64)
    cdef double[:] b2
    cdef double alpha, beta_, gamma, fact
    cdef Py_ssize_t i
    if n < 3:
        raise ValueError("cyclic system needs at least 3 unknowns")
    alpha = up[n - 1]
    beta_ = lo[0]
    gamma = -bb[0]
    bb[0] = bb[0] - gamma
    bb[n - 1] = bb[n - 1] - alpha * beta_ / gamma
    b2 = bb.copy()
    z[0] = gamma
    z[n - 1] = alpha
    with nogil:
        _thomas(lo, bb, up, x, cp, n)
        _thomas(lo, b2, up, z, cp, n)
        fact = (x[0] + beta_ * x[n - 1] / gamma) / (1.0 + z[0] + beta_ * z[n - 1] / gamma)
        for i in range(n):
            x[i] = x[i] - fact * z[i]
    return np.asarray(x)


def periodic_cubic_interp(values, double x0, double dx, xq):
    """Four-point Lagrange interpolation of periodic samples at ``xq``."""
    cdef double[:] f = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[:] q = np.ascontiguousarray(np.atleast_1d(xq), dtype=np.float64)
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t m = q.shape[0]
    cdef double[:] out = np.empty(m, dtype=np.float64)
    cdef Py_ssize_t k, j, i0, im, ip, ipp
    cdef double s, t
    with nogil:
        for k in range(m):
            s = (q[k] - x0) / dx
            j = <Py_ssize_t>floor(s)
            t = s - j
            i0 = j % n
            if i0 < 0:
                i0 = i0 + n
            im = (i0 - 1 + n) % n
            ip = (i0 + 1) % n
            ipp = (i0 + 2) % n
            out[k] = (-t * (t - 1.0) * (t - 2.0) / 6.0 * f[im]
                      + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * f[i0]
                      - (t + 1.0) * t * (t - 2.0) / 2.0 * f[ip]
                      + (t + 1.0) * t * (t - 1.0) / 6.0 * f[ipp])
    return np.asarray(out)
