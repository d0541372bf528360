# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled simplex pivot kernels.

Mirrors hubnet/milp/_kernels_py.py; keep the two in sync. The test suite
exercises both backends on the same LP corpus.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, isfinite

cnp.import_array()

BACKEND = "cython"


def pivot_update(double[:, ::1] binv, double[::1] w, Py_ssize_t r):
    cdef Py_ssize_t m = binv.shape[0]
    cdef Py_ssize_t i, j
    cdef double piv = w[r]
    cdef double wi
    for j in range(m):
        binv[r, j] /= piv
    for i in range(m):
        if i == r:
            continue
        wi = w[i]
        if wi == 0.0:
            continue
        for j in range(m):
            binv[i, j] -= wi * binv[r, j]


def ratio_test(double[::1] xB, double[::1] lbB, double[::1] ubB,
               double[::1] delta, double gap, double tol, bint phase1):
    cdef Py_ssize_t m = xB.shape[0]
    cdef double best_t = gap
    cdef Py_ssize_t best_i = -1
    cdef bint best_target = False
    cdef double best_mag = 0.0
    cdef Py_ssize_t i
    cdef double d, limit, t
    cdef bint target
    for i in range(m):
        d = delta[i]
        if d > tol:
            if phase1 and xB[i] > ubB[i] + tol:
                continue
            if phase1 and xB[i] < lbB[i] - tol:
                limit = lbB[i]
                target = False
            else:
                limit = ubB[i]
                target = True
            if not isfinite(limit):
                continue
            t = (limit - xB[i]) / d
        elif d < -tol:
            if phase1 and xB[i] < lbB[i] - tol:
                continue
            if phase1 and xB[i] > ubB[i] + tol:
                limit = ubB[i]
                target = True
            else:
                limit = lbB[i]
                target = False
            if not isfinite(limit):
                continue
            t = (limit - xB[i]) / d
        else:
            continue
        if t < 0.0:
            t = 0.0
        if t < best_t - 1e-12 or (t < best_t + 1e-12 and fabs(d) > best_mag):
            best_t = t
            best_i = i
            best_target = target
            best_mag = fabs(d)
    if best_i < 0:
        if not isfinite(best_t):
            return INFINITY, -2, False
        return best_t, -1, False
    return best_t, best_i, best_target


def dual_ratio_test(double[::1] d, double[::1] alpha, signed char[::1] stat,
                    double[::1] lb, double[::1] ub, double tol):
    cdef Py_ssize_t n = d.shape[0]
    cdef Py_ssize_t best_j = -1
    cdef double best_ratio = INFINITY
    cdef double best_mag = 0.0
    cdef Py_ssize_t j
    cdef double a, ratio
    cdef signed char s
    for j in range(n):
        s = stat[j]
        if s == 2:
            continue
        if ub[j] - lb[j] <= tol and s != 3:
            continue
        a = alpha[j]
        if s == 0:
            if a >= -tol:
                continue
            ratio = d[j] / (-a)
        elif s == 1:
            if a <= tol:
                continue
            ratio = -d[j] / a
        else:
            if fabs(a) <= tol:
                continue
            ratio = fabs(d[j]) / fabs(a)
        if ratio < 0.0:
            ratio = 0.0
        if ratio < best_ratio - 1e-12 or (
            ratio < best_ratio + 1e-12 and fabs(a) > best_mag
        ):
            best_ratio = ratio
            best_j = j
            best_mag = fabs(a)
    return best_j
