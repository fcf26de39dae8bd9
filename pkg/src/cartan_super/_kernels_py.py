"""Pure numpy row reduction over GF(p), used when the compiled kernel is absent."""

import numpy as np


def rref_inplace(A: np.ndarray, p: int) -> np.ndarray:
    """Same contract as the compiled kernel: reduce ``A`` in place, return pivots."""
    nr, nc = A.shape
    r = 0
    pivots = []
    for c in range(nc):
        if r >= nr:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            A[[r, piv], c:] = A[[piv, r], c:]
        inv = pow(int(A[r, c]), p - 2, p)
        if inv != 1:
            A[r, c:] = (A[r, c:] * inv) % p
        col = A[:, c].copy()
        col[r] = 0
        rows = np.flatnonzero(col)
        if rows.size:
            A[rows, c:] = (A[rows, c:] - np.outer(col[rows], A[r, c:])) % p
        pivots.append(c)
        r += 1
    return np.asarray(pivots, dtype=np.int64)
