# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo kernels (see ``_fallback.py`` for the reference)."""

import numpy as np

from libc.math cimport cos, log, sin, sqrt
from libc.stdint cimport uint64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15
cdef uint64_t M1 = 0xBF58476D1CE4E5B9
cdef uint64_t M2 = 0x94D049BB133111EB
cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t key, uint64_t i) noexcept nogil:
    return (<double>(_mix64(key + (i + 1) * GOLDEN) >> 11) + 0.5) * INV_2_53


cdef inline void _normal_pair(uint64_t key, uint64_t pair, double* z0, double* z1) noexcept nogil:
    cdef double r = sqrt(-2.0 * log(_uniform(key, 2 * pair)))
    cdef double a = TWO_PI * _uniform(key, 2 * pair + 1)
    z0[0] = r * cos(a)
    z1[0] = r * sin(a)


cdef inline double _normal(uint64_t key, uint64_t j) noexcept nogil:
    cdef double z0, z1
    _normal_pair(key, j >> 1, &z0, &z1)
    return z0 if (j & 1) == 0 else z1


def standard_normals(uint64_t key, Py_ssize_t start, Py_ssize_t n):
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] view = out
    cdef Py_ssize_t k = 0
    cdef uint64_t j = <uint64_t>start
    cdef double z0, z1
    with nogil:
        if n > 0 and (j & 1) == 1:
            view[0] = _normal(key, j)
            k = 1
            j += 1
        while k + 1 < n:
            _normal_pair(key, j >> 1, &z0, &z1)
            view[k] = z0
            view[k + 1] = z1
            k += 2
            j += 2
        if k < n:
            view[k] = _normal(key, j)
    return out


def count_region_hits(uint64_t key, double mean, double sd_theta, double tau,
                      double se, const double[::1] lowers,
                      const double[::1] uppers, Py_ssize_t n):
    cdef Py_ssize_t i, k, nint = lowers.shape[0]
    cdef long long hits = 0
    cdef uint64_t base
    cdef double theta, theta_r, est, a0, a1, b0, b1, z0, z1, z2
    with nogil:
        for i in range(n):
            # normals 3i..3i+2 always span exactly two Box-Muller pairs
            base = 3 * <uint64_t>i
            _normal_pair(key, base >> 1, &a0, &a1)
            _normal_pair(key, (base >> 1) + 1, &b0, &b1)
            if (base & 1) == 0:
                z0 = a0; z1 = a1; z2 = b0
            else:
                z0 = a1; z1 = b0; z2 = b1
            theta = mean + sd_theta * z0
            theta_r = theta + tau * z1
            est = theta_r + se * z2
            for k in range(nint):
                if lowers[k] <= est and est <= uppers[k]:
                    hits += 1
                    break
    return hits
