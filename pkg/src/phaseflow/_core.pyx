# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the sequential hot loops.

Kept signature-compatible with ``phaseflow._core_py``; the dispatch in
``phaseflow.kernels`` picks whichever is importable.
"""

import numpy as np


def ar_simulate(double[:, :, ::1] coefficients, double[:, ::1] innovations, Py_ssize_t burn_in=0):
    """Drive z(t) = sum_p A(p) z(t-p) + xi(t) and drop the first ``burn_in`` steps.

    ``coefficients`` is (P, n, n), ``innovations`` is (T, n); returns
    (T - burn_in, n).  Terms with t - p < 0 are treated as zero.
    """
    cdef Py_ssize_t P = coefficients.shape[0]
    cdef Py_ssize_t n = coefficients.shape[1]
    cdef Py_ssize_t T = innovations.shape[0]
    out = np.zeros((T, n))
    cdef double[:, ::1] z = out
    cdef Py_ssize_t t, p, i, j, pmax
    cdef double acc
    for t in range(T):
        pmax = P if t >= P else t
        for i in range(n):
            acc = innovations[t, i]
            for p in range(1, pmax + 1):
                for j in range(n):
                    acc = acc + coefficients[p - 1, i, j] * z[t - p, j]
            z[t, i] = acc
    return out[burn_in:].copy()
