# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled gap-moment kernels. Mirrors ``_kernels_py`` operation for operation."""
from libc.math cimport pow, fabs

import numpy as np

cdef enum:
    COMPENSATE_ABOVE = 64


cdef double _ordered_sum(double[::1] terms) nogil:
    cdef Py_ssize_t i, n = terms.shape[0]
    cdef double s = 0.0, c = 0.0, t, u
    if n <= COMPENSATE_ABOVE:
        for i in range(n):
            s += terms[i]
        return s
    for i in range(n):
        t = terms[i]
        u = s + t
        if fabs(s) >= fabs(t):
            c += (s - u) + t
        else:
            c += (t - u) + s
        s = u
    return s + c


def ordered_sum(terms):
    cdef double[::1] buf = np.ascontiguousarray(terms, dtype=np.float64)
    return _ordered_sum(buf)


def gap_moment(values, double target, int gap_power, double exponent):
    cdef double[::1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double[::1] terms = np.empty(n, dtype=np.float64)
    cdef double g, gp, total
    with nogil:
        for i in range(n):
            g = target - v[i]
            if gap_power == 1:
                gp = g
            else:
                gp = g * g
            if exponent == 0.0:
                terms[i] = gp
            else:
                terms[i] = gp * pow(v[i], exponent)
        total = _ordered_sum(terms)
    return total
