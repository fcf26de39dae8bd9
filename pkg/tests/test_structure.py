import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cartan_super.families import AlgebraSpec, build, derived
from cartan_super.structure import (TableAlgebra, center, centralizer_in_w, check_jacobi,
                                    height_depth, ideal_closure_dense, ideal_closure_graded,
                                    is_simple, is_transitive, normalizer, simplicity, w_subspace)

P = 5


def sl2(p=P, corrupt=False):
    # e, h, f with [h,e]=2e, [h,f]=-2f, [e,f]=h
    e, h, f = 0, 1, 2
    c = {(h, e, e): 2, (e, h, e): -2, (h, f, f): -2, (f, h, f): 2, (e, f, h): 1, (f, e, h): -1}
    if corrupt:
        c[(e, f, h)] = 2
    return TableAlgebra(p, [0, 0, 0], c, deg=[1, 0, -1])


def heisenberg(p=P):
    # [x, y] = z, z central
    return TableAlgebra(p, [0, 0, 0], {(0, 1, 2): 1, (1, 0, 2): -1}, deg=[-1, -1, -2])


def odd_pair():
    # two odd elements with [a,a] = z, z even and central (a Lie superalgebra)
    return TableAlgebra(P, [1, 1, 0], {(0, 0, 2): 1, (1, 1, 2): 1})


def test_jacobi_on_tables():
    assert check_jacobi(sl2()).ok
    assert check_jacobi(heisenberg()).ok
    assert check_jacobi(odd_pair()).ok
    bad = check_jacobi(sl2(corrupt=True))
    assert not bad.ok and bad.violation[0] == "antisymmetry"


def test_jacobi_catches_non_lie_bracket():
    # antisymmetric but [x,[y,z]] cycle fails: [x,y]=y, [y,z]=x, [x,z]=0
    c = {(0, 1, 1): 1, (1, 0, 1): -1, (1, 2, 0): 1, (2, 1, 0): -1}
    rep = check_jacobi(TableAlgebra(P, [0, 0, 0], c))
    assert not rep.ok and rep.violation[0] == "jacobi"


def test_center_and_simplicity_of_tables():
    assert center(sl2()).shape[0] == 0
    assert is_simple(sl2())
    z = center(heisenberg())
    assert z.shape[0] == 1 and list(np.flatnonzero(z[0])) == [2]
    assert not is_simple(heisenberg())
    assert center(TableAlgebra(P, [0, 1], {})).shape[0] == 2


def brute_ideal_dim(h, vec):
    """Span closure by repeated bracketing with every basis element, dense."""
    from cartan_super.field import rref
    span, _ = rref(np.array([vec]) % h.p, h.p)
    while True:
        new = [(h.ad(i) @ row) % h.p for row in span for i in range(h.dim)]
        R, _ = rref(np.vstack([span] + [np.array(new)]), h.p)
        if R.shape[0] == span.shape[0]:
            return span.shape[0]
        span = R


@given(st.integers(0, 40))
def test_ideal_closure_matches_brute_force(k):
    h = build(AlgebraSpec("S", 1, P, (1,), n=2))
    vec = np.zeros(h.dim, dtype=np.int64)
    vec[k] = 1
    want = brute_ideal_dim(h, vec)
    assert ideal_closure_graded(h, vec) == want
    assert ideal_closure_dense(h, vec) == want


def test_height_of_witt_by_monomial_degrees():
    # top field: x^(p-1) x_2 x_3 d_1 has degree (p-1)+2-1; bottom: d_i
    h = build(AlgebraSpec("W", 1, P, (1,), n=2))
    assert height_depth(h) == (1, P - 1 + 2 - 1)


def test_transitivity():
    assert is_transitive(build(AlgebraSpec("W", 1, P, (1,), n=2)))
    assert is_transitive(build(AlgebraSpec("K", 1, P, (1,), n=2)))


@pytest.mark.parametrize("spec,simple", [
    (AlgebraSpec("W", 1, P, (1,), n=2), True),
    (AlgebraSpec("S", 1, P, (1,), n=3), False),
    (AlgebraSpec("S", 1, P, (1,), n=3, variant="derived1"), True),
    (AlgebraSpec("S", 1, P, (1,), n=2, variant="bar"), False),
    (AlgebraSpec("H", 2, P, (1, 1), n=2, variant="derived1"), True),
])
def test_simplicity(spec, simple):
    rep = simplicity(build(spec))
    assert rep.simple is simple


def test_nonsimple_witness_is_a_proper_ideal():
    h = build(AlgebraSpec("S", 1, P, (1,), n=3))
    rep = simplicity(h)
    assert rep.witness_dim is not None and 0 < rep.witness_dim < h.dim
    # the derived algebra is an ideal of codimension one
    assert derived(h).dim == h.dim - 1


@pytest.mark.parametrize("spec", [AlgebraSpec("S", 1, P, (1,), n=2), AlgebraSpec("H", 2, P, (1, 1), n=2)])
def test_normalizer_modes_agree(spec):
    h = build(spec)
    a, b = normalizer(h, mode="full"), normalizer(h, mode="reduced")
    assert a == b
    assert centralizer_in_w(h) == 0


def test_normalizer_of_witt_is_witt():
    h = build(AlgebraSpec("W", 1, P, (1,), n=2))
    assert normalizer(h) == w_subspace(h)


def test_normalizer_contains_algebra_and_is_closed():
    h = build(AlgebraSpec("S", 1, P, (1,), n=2))
    nor = normalizer(h)
    assert nor.contains(h.w_rows)
    bar = build(AlgebraSpec("S", 1, P, (1,), n=2, variant="bar"))
    assert nor == w_subspace(bar)
