# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Cython fast path for the polynomial-times-Gaussian kernel sums.

Same contract as ``fastsums_py``: point sums over data, pair sums over
unordered pairs of sorted data with an even kernel and a support cutoff.
"""

from libc.math cimport exp

import numpy as np

BACKEND = "cython"


cdef inline double _gp(double u, const double[::1] c, int deg, double inv2s2) nogil:
    cdef double acc = c[deg]
    cdef int k
    for k in range(deg - 1, -1, -1):
        acc = acc * u + c[k]
    return acc * exp(-u * u * inv2s2)


def point_sum(x, double center, double scale, coeffs, double inv2s2, double cutoff):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef int n = xv.shape[0]
    cdef int deg = c.shape[0] - 1
    cdef double total = 0.0, u
    cdef int i
    with nogil:
        for i in range(n):
            u = (xv[i] - center) / scale
            if -cutoff <= u <= cutoff:
                total += _gp(u, c, deg, inv2s2)
    return total


def pair_sum(x_sorted, double scale, coeffs, double inv2s2, double cutoff):
    cdef double[::1] xv = np.ascontiguousarray(x_sorted, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef int n = xv.shape[0]
    cdef int deg = c.shape[0] - 1
    cdef double thr = cutoff * scale
    cdef double total = 0.0, xi
    cdef int i, j
    with nogil:
        for i in range(n - 1):
            xi = xv[i]
            for j in range(i + 1, n):
                if xv[j] - xi > thr:
                    break
                total += _gp((xi - xv[j]) / scale, c, deg, inv2s2)
    return total
