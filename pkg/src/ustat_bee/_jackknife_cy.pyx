# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled jackknife core for the built-in scalar kernels.

Same contract as the pure fallback: visit every m-subset of each replicate
row once, accumulate the kernel value into U and into the q_i slot of every
member index.  Kernels are dispatched by integer id so the inner loop stays
in C; anything this module does not cover routes through the pure core.
"""

from libc.math cimport fabs

from math import comb

import numpy as np

cimport numpy as cnp

cnp.import_array()

SUPPORTED_IDS = (1, 2, 3, 4)  # sum, variance, gini, wilcoxon
GENERIC_DEGREE_IDS = (1,)     # kernels defined for any m


cdef inline double kernel_eval(int kid, double[:, :] data, Py_ssize_t r,
                               Py_ssize_t[:] idx, int m) nogil:
    cdef double acc
    cdef int k
    if kid == 1:
        acc = 0.0
        for k in range(m):
            acc += data[r, idx[k]]
        return acc
    elif kid == 2:
        return 0.5 * (data[r, idx[0]] - data[r, idx[1]]) * (data[r, idx[0]] - data[r, idx[1]])
    elif kid == 3:
        return fabs(data[r, idx[0]] - data[r, idx[1]])
    else:
        return 1.0 if data[r, idx[0]] + data[r, idx[1]] > 0 else 0.0


cdef void _accumulate(double[:, :] data, int m, int kid,
                      double[:] U, double[:, :] Q, Py_ssize_t[:] idx) nogil:
    cdef Py_ssize_t R = data.shape[0], n = data.shape[1]
    cdef Py_ssize_t r, pos
    cdef int k
    cdef double hs
    for r in range(R):
        for k in range(m):
            idx[k] = k
        while True:
            hs = kernel_eval(kid, data, r, idx, m)
            U[r] += hs
            for k in range(m):
                Q[r, idx[k]] += hs
            # next m-combination in lexicographic order
            pos = m - 1
            while pos >= 0 and idx[pos] == n - m + pos:
                pos -= 1
            if pos < 0:
                break
            idx[pos] += 1
            for k in range(pos + 1, m):
                idx[k] = idx[k - 1] + 1


def jackknife_batch(data, int m, int kernel_id):
    """Exact (U, Q) for float64 (R, n) data and a supported kernel id."""
    if kernel_id not in SUPPORTED_IDS:
        raise ValueError(f"compiled core does not implement kernel id {kernel_id}")
    if m != 2 and kernel_id not in GENERIC_DEGREE_IDS:
        raise ValueError(f"kernel id {kernel_id} has fixed degree 2")
    arr = np.ascontiguousarray(data, dtype=np.float64)
    cdef Py_ssize_t R = arr.shape[0], n = arr.shape[1]
    if n < m:
        raise ValueError(f"need n >= m, got n={n} < m={m}")
    U = np.zeros(R)
    Q = np.zeros((R, n))
    idx = np.zeros(m, dtype=np.intp)
    _accumulate(arr, m, kernel_id, U, Q, idx)
    U /= comb(n, m)
    Q /= comb(n - 1, m - 1)
    return U, Q
