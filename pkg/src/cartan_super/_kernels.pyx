# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled row reduction over GF(p)."""

import numpy as np
cimport numpy as cnp

ctypedef cnp.int64_t i64


cdef inline i64 _inv(i64 a, i64 p):
    cdef i64 r = 1, e = p - 2, b = a % p
    while e:
        if e & 1:
            r = (r * b) % p
        b = (b * b) % p
        e >>= 1
    return r


def rref_inplace(i64[:, ::1] A, i64 p):
    """Reduce ``A`` (entries in [0, p)) to reduced row echelon form in place.

    Pivoting takes the leftmost nonzero column and the smallest row index.
    Returns the pivot columns as an int64 array.
    """
    cdef Py_ssize_t nr = A.shape[0], nc = A.shape[1]
    cdef Py_ssize_t r = 0, c, i, k, piv
    cdef i64 f, inv, tmp
    pivots = []
    for c in range(nc):
        if r >= nr:
            break
        piv = -1
        for i in range(r, nr):
            if A[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for k in range(c, nc):
                tmp = A[piv, k]
                A[piv, k] = A[r, k]
                A[r, k] = tmp
        inv = _inv(A[r, c], p)
        if inv != 1:
            for k in range(c, nc):
                A[r, k] = (A[r, k] * inv) % p
        for i in range(nr):
            if i == r:
                continue
            f = A[i, c]
            if f == 0:
                continue
            f = p - f
            for k in range(c, nc):
                if A[r, k] != 0:
                    A[i, k] = (A[i, k] + f * A[r, k]) % p
        pivots.append(c)
        r += 1
    return np.asarray(pivots, dtype=np.int64)
