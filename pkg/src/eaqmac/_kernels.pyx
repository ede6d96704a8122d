# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sequence kernels over the d**n computational basis of (C^d)^{(x)n}.

Sequence index x encodes letters x_1..x_n base d, x_1 most significant.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def letter_counts(int n, int d):
    """(d**n, d) array: occurrences of each letter in every length-n sequence."""
    cdef Py_ssize_t total = d ** n
    cdef cnp.ndarray[cnp.int64_t, ndim=2] out = np.zeros((total, d), dtype=np.int64)
    cdef Py_ssize_t x, r
    cdef int j
    for x in range(total):
        r = x
        for j in range(n):
            out[x, r % d] += 1
            r //= d
    return out


def count_keys(int n, int d):
    """Mixed-radix key sum_a count_a (n+1)**(d-1-a) per sequence.

    Descending key order equals descending lexicographic order of count vectors.
    """
    cdef Py_ssize_t total = d ** n
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(total, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] weight = np.empty(d, dtype=np.int64)
    cdef Py_ssize_t x, r, acc
    cdef int j, a
    acc = 1
    for a in range(d - 1, -1, -1):
        weight[a] = acc
        acc *= (n + 1)
    for x in range(total):
        r = x
        acc = 0
        for j in range(n):
            acc += weight[r % d]
            r //= d
        out[x] = acc
    return out

