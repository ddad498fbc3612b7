# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise kernels. Same contract as _pairwise_np."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt


def max_pairwise_dist(x):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xa = \
        np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xa.shape[0], d = xa.shape[1]
    if n < 2:
        return 0.0
    cdef double[:, ::1] v = xa
    cdef double best = 0.0, acc, diff
    cdef Py_ssize_t i, j, k
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = v[i, k] - v[j, k]
                    acc += diff * diff
                if acc > best:
                    best = acc
    return sqrt(best)


def max_pair_gain(y, x):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] ya = \
        np.ascontiguousarray(y, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] xa = \
        np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xa.shape[0], dx = xa.shape[1], dy = ya.shape[1]
    if n < 2:
        return 0.0
    cdef double[:, ::1] vx = xa
    cdef double[:, ::1] vy = ya
    cdef double best = 0.0, den, num, diff, ratio
    cdef Py_ssize_t i, j, k
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                den = 0.0
                for k in range(dx):
                    diff = vx[i, k] - vx[j, k]
                    den += diff * diff
                if den <= 0.0:
                    continue
                num = 0.0
                for k in range(dy):
                    diff = vy[i, k] - vy[j, k]
                    num += diff * diff
                ratio = num / den
                if ratio > best:
                    best = ratio
    return sqrt(best)
