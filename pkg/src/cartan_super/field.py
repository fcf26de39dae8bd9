"""Arithmetic in GF(p) and the exact linear algebra used by every other module.

Dense work goes through a single row-reduction kernel.  The compiled version
lives in ``_kernels`` and is picked at import; ``_kernels_py`` is the numpy
fallback.  Set ``CARTAN_SUPER_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

if os.environ.get("CARTAN_SUPER_PURE"):
    from ._kernels_py import rref_inplace
    KERNEL = "python"
else:
    try:
        from ._kernels import rref_inplace
        KERNEL = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        from ._kernels_py import rref_inplace
        KERNEL = "python"


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class FieldCtx:
    """The prime field GF(p) with p > 3."""

    p: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or not _is_prime(int(self.p)):
            raise ValueError(f"p={self.p} is not prime")
        if self.p <= 3:
            raise ValueError(f"p={self.p}: characteristic must exceed 3")
        if self.p >= 1 << 16:
            raise ValueError("p must be below 2**16")

    def __call__(self, a) -> int:
        return int(a) % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("inverse of 0")
        return pow(a, self.p - 2, self.p)

    def neg(self, a: int) -> int:
        return (-a) % self.p


@lru_cache(maxsize=None)
def inverse_table(p: int) -> np.ndarray:
    tab = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        tab[a] = pow(a, p - 2, p)
    return tab


# ---------------------------------------------------------------------------
# dense kernels

def rref(A, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Reduced row echelon form of a copy of ``A``; returns (R, pivots) with zero rows dropped."""
    R = np.ascontiguousarray(np.asarray(A, dtype=np.int64) % p)
    if R.ndim != 2:
        raise ValueError("expected a 2d array")
    if R.size == 0:
        return R[:0], np.zeros(0, dtype=np.int64)
    piv = rref_inplace(R, p)
    return R[: len(piv)], piv


def nullspace_dense(A, p: int, ncols: int | None = None) -> np.ndarray:
    """Basis of {v : A v = 0}, as the rows of a matrix in reduced echelon form."""
    A = np.asarray(A, dtype=np.int64)
    if A.ndim != 2:
        raise ValueError("expected a 2d array")
    c = A.shape[1] if ncols is None else ncols
    if A.shape[0] == 0:
        return np.eye(c, dtype=np.int64)
    R, piv = rref(A, p)
    free = np.setdiff1d(np.arange(c), piv)
    N = np.zeros((free.size, c), dtype=np.int64)
    N[np.arange(free.size), free] = 1
    if piv.size and free.size:
        N[:, piv] = (-R[:, free].T) % p
    return echelon(N, p)


def echelon(V, p: int) -> np.ndarray:
    """Canonical basis (RREF rows) of the row span of ``V``."""
    V = np.asarray(V, dtype=np.int64)
    if V.shape[0] == 0:
        return V.reshape(0, V.shape[1] if V.ndim == 2 else 0)
    R, _ = rref(V, p)
    return R


def pivots_of(R: np.ndarray) -> np.ndarray:
    """Leading column of each row of an echelon matrix."""
    if R.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.argmax(R != 0, axis=1).astype(np.int64)


def reduce_against(R: np.ndarray, piv: np.ndarray, V: np.ndarray, p: int) -> np.ndarray:
    """Remainders of the rows of ``V`` after clearing the pivot columns of RREF ``R``."""
    if R.shape[0] == 0:
        return np.asarray(V, dtype=np.int64) % p
    V = np.asarray(V, dtype=np.int64)
    return (V - V[:, piv] @ R) % p


# ---------------------------------------------------------------------------
# sparse matrices

class MatrixFp:
    """Sparse matrix over GF(p); no stored zeros, canonical residues."""

    __slots__ = ("p", "csr")

    def __init__(self, data, p: int, shape=None):
        FieldCtx(p)
        self.p = p
        if isinstance(data, MatrixFp):
            m = data.csr
        elif sp.issparse(data):
            m = sp.csr_matrix(data, dtype=np.int64)
        elif isinstance(data, dict):
            rows = [k[0] for k in data]
            cols = [k[1] for k in data]
            vals = [int(v) for v in data.values()]
            m = sp.csr_matrix((vals, (rows, cols)), shape=shape, dtype=np.int64)
        else:
            m = sp.csr_matrix(np.asarray(data, dtype=np.int64).reshape(shape) if shape else np.asarray(data, dtype=np.int64))
        self.csr = canon(m, p)

    @property
    def shape(self):
        return self.csr.shape

    @property
    def nrows(self):
        return self.csr.shape[0]

    @property
    def ncols(self):
        return self.csr.shape[1]

    def entries(self) -> dict:
        c = self.csr.tocoo()
        return {(int(i), int(j)): int(v) for i, j, v in zip(c.row, c.col, c.data)}

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def __matmul__(self, other):
        if isinstance(other, MatrixFp):
            return MatrixFp(self.csr @ other.csr, self.p)
        return (self.csr @ np.asarray(other, dtype=np.int64)) % self.p

    def __eq__(self, other):
        return isinstance(other, MatrixFp) and self.p == other.p and self.shape == other.shape \
            and (self.csr != other.csr).nnz == 0

    def __repr__(self):
        return f"MatrixFp({self.nrows}x{self.ncols}, nnz={self.csr.nnz}, p={self.p})"


def canon(m, p: int) -> sp.csr_matrix:
    """Reduce a scipy sparse matrix mod p and drop explicit zeros."""
    m = sp.csr_matrix(m, dtype=np.int64, copy=True)
    m.data %= p
    m.eliminate_zeros()
    m.sum_duplicates()
    return m


def _as_csr(A, p):
    if isinstance(A, MatrixFp):
        return A.csr
    if sp.issparse(A):
        return canon(A, p)
    return None


def nullspace_matrix(A, p: int, seed: int = 0) -> np.ndarray:
    """RREF basis (as rows) of the kernel of a dense or sparse matrix.

    Tall sparse systems are first compressed by a random sparse sketch; the
    result is then checked against ``A`` exactly, so the answer is never
    probabilistic, only the running time is.
    """
    S = _as_csr(A, p)
    if S is None:
        return nullspace_dense(A, p)
    nr, nc = S.shape
    if nc == 0:
        return np.zeros((0, 0), dtype=np.int64)
    if nr == 0 or S.nnz == 0:
        return np.eye(nc, dtype=np.int64)
    if nr <= 2 * nc + 32:
        return nullspace_dense(S.toarray(), p)
    rng = np.random.default_rng(seed)
    k = nc + 16
    per_col = 3
    for _ in range(6):
        rows = rng.integers(0, k, size=(per_col, nr)).ravel()
        cols = np.tile(np.arange(nr), per_col)
        vals = rng.integers(1, p, size=per_col * nr)
        sketch = sp.csr_matrix((vals, (rows, cols)), shape=(k, nr), dtype=np.int64)
        C = (sketch @ S).toarray() % p
        N = nullspace_dense(C, p)
        if N.shape[0] == 0 or not ((S @ N.T) % p).any():
            return N
        k += nc
        per_col += 2
    # exact fallback: incremental elimination over row chunks
    R = np.zeros((0, nc), dtype=np.int64)
    step = max(4 * nc, 256)
    for start in range(0, nr, step):
        block = S[start:start + step].toarray() % p
        R, _ = rref(np.vstack([R, block]), p)
    return nullspace_dense(R, p, ncols=nc)


def nullspace(A, p: int | None = None) -> list[np.ndarray]:
    """Kernel basis in canonical reduced echelon form, as a list of vectors."""
    if p is None:
        if not isinstance(A, MatrixFp):
            raise ValueError("p required for raw arrays")
        p = A.p
    N = nullspace_matrix(A, p)
    return [row.copy() for row in N]


def rank(A, p: int | None = None) -> int:
    if p is None:
        p = A.p
    S = _as_csr(A, p)
    nc = S.shape[1] if S is not None else np.asarray(A).shape[1]
    return nc - nullspace_matrix(A, p).shape[0]


def in_span(basis, v, p: int):
    """Coordinates c with sum c_i b_i = v, or None when v is outside the span."""
    v = np.asarray(v, dtype=np.int64) % p
    B = np.asarray(basis, dtype=np.int64).reshape(len(basis), -1) if len(basis) else np.zeros((0, v.size), dtype=np.int64)
    if B.shape[1] != v.size:
        raise ValueError("dimension mismatch")
    if B.shape[0] == 0:
        return np.zeros(0, dtype=np.int64) if not v.any() else None
    aug = np.hstack([B.T % p, v[:, None]])
    R, piv = rref(aug, p)
    k = B.shape[0]
    if piv.size and piv[-1] == k:
        return None
    c = np.zeros(k, dtype=np.int64)
    c[piv] = R[:, k]
    return c
