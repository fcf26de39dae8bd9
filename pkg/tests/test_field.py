import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from cartan_super import _kernels_py
from cartan_super.field import (FieldCtx, MatrixFp, in_span, inverse_table, nullspace,
                                nullspace_matrix, rank, rref)

try:
    from cartan_super import _kernels
except ImportError:  # pragma: no cover
    _kernels = None

P = 5


def brute_kernel_size(A, p):
    """Number of vectors v in GF(p)^n with A v = 0, by enumeration."""
    n = A.shape[1]
    return sum(1 for v in itertools.product(range(p), repeat=n) if not (A @ np.array(v) % p).any())


small_mats = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(
        lambda c: st.lists(st.integers(0, P - 1), min_size=r * c, max_size=r * c).map(
            lambda xs: np.array(xs, dtype=np.int64).reshape(r, c))))


def test_field_ctx_rejects_small_and_composite():
    for bad in (2, 3, 4, 9):
        with pytest.raises(ValueError):
            FieldCtx(bad)
    assert FieldCtx(7).inv(3) == 5
    with pytest.raises(ZeroDivisionError):
        FieldCtx(7).inv(0)


def test_inverse_table():
    tab = inverse_table(11)
    assert all(a * tab[a] % 11 == 1 for a in range(1, 11))


@given(small_mats)
def test_nullspace_matches_enumeration(A):
    N = nullspace_matrix(A, P)
    assert not ((A @ N.T) % P).any()
    assert P ** N.shape[0] == brute_kernel_size(A, P)


@given(small_mats)
def test_rank_nullity(A):
    assert rank(MatrixFp(A, P)) + len(nullspace(MatrixFp(A, P))) == A.shape[1]


@given(small_mats)
def test_rref_is_reduced(A):
    R, piv = rref(A, P)
    for r, c in enumerate(piv):
        assert R[r, c] == 1
        assert np.count_nonzero(R[:, c]) == 1
    # row space preserved: every row of A is in the span of R
    for row in A:
        assert in_span(list(R), row, P) is not None


@pytest.mark.skipif(_kernels is None, reason="compiled kernel not built")
@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 2 ** 32 - 1))
def test_compiled_kernel_agrees_with_numpy(r, c, seed):
    A = np.random.default_rng(seed).integers(0, 7, (r, c))
    A1, A2 = A.copy(), A.copy()
    p1 = _kernels.rref_inplace(A1, 7)
    p2 = _kernels_py.rref_inplace(A2, 7)
    assert list(p1) == list(p2)
    assert (A1 == A2).all()


def test_sketched_nullspace_on_tall_sparse_system():
    rng = np.random.default_rng(1)
    # rows orthogonal to a known 10-dim kernel: build A = M @ B with B of rank 30
    B = rng.integers(0, P, (30, 40))
    A = sp.csr_matrix((rng.integers(0, P, (400, 30)) @ B) % P)
    N = nullspace_matrix(A, P)
    assert not ((A @ N.T) % P).any()
    assert N.shape[0] == 40 - rank(B, P)


def test_in_span_outside():
    assert in_span([np.array([1, 0, 0])], np.array([0, 1, 0]), P) is None
    c = in_span([np.array([1, 1, 0]), np.array([0, 1, 1])], np.array([2, 3, 1]), P)
    assert list(c) == [2, 1]


def test_matrixfp_drops_zeros_and_reduces():
    M = MatrixFp({(0, 0): 5, (1, 1): 7}, 5, shape=(2, 2))
    assert M.entries() == {(1, 1): 2}
