"""Symbolic vector fields, and the sparse operator matrices checked against them."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cartan_super.operators import space_ops
from cartan_super.superspace import SpaceParams, SuperPoly, monomial_table
from cartan_super.vectorfields import (VectorField, apply, bracket, bracket_O, divergence,
                                       op_DH, op_DK, op_DKO, op_TH)

W12 = SpaceParams(1, 2, (1,), 5)
H22 = SpaceParams(2, 2, (1, 1), 5)
K12 = SpaceParams(1, 2, (1,), 5)
HO3 = SpaceParams(3, 3, (1, 1, 1), 5)
KO3 = SpaceParams(3, 4, (1, 1, 1), 5)


def hom_poly(params, parity, max_terms=3):
    T = monomial_table(params)
    idx = [k for k in range(T.size) if T.monos[k].parity == parity]
    return st.lists(st.tuples(st.sampled_from(idx), st.integers(1, params.p - 1)),
                    min_size=1, max_size=max_terms).map(
        lambda ts: SuperPoly(params, {T.monos[k]: c for k, c in ts}))


@st.composite
def hom_field(draw, params, parity):
    out = VectorField(params)
    for i in range(1, params.nvars + 1):
        want = (parity + (i > params.m)) % 2
        f = draw(st.one_of(st.none(), hom_poly(params, want, 2)))
        if f is not None:
            out = out + VectorField.from_poly(f, i)
    return out


def field_to_w(D: VectorField) -> np.ndarray:
    ops = space_ops(D.params)
    v = np.zeros(ops.size * ops.N, dtype=np.int64)
    for (mono, i), c in D.terms.items():
        v[ops.table.index[mono] * ops.N + i - 1] = c
    return v


def poly_to_o(f: SuperPoly) -> np.ndarray:
    return monomial_table(f.params).poly_vector(f)


@given(st.integers(0, 1), st.integers(0, 1), st.data())
def test_bracket_is_operator_commutator(pd, pe, data):
    D = data.draw(hom_field(W12, pd))
    E = data.draw(hom_field(W12, pe))
    f = data.draw(hom_poly(W12, 0) | hom_poly(W12, 1))
    s = -1 if pd * pe else 1
    lhs = apply(bracket(D, E), f)
    rhs = apply(D, apply(E, f)) - apply(E, apply(D, f)).scale(s)
    assert lhs == rhs


@given(st.integers(0, 1), st.integers(0, 1), st.data())
def test_bracket_super_antisymmetric(pd, pe, data):
    D = data.draw(hom_field(W12, pd))
    E = data.draw(hom_field(W12, pe))
    s = -1 if pd * pe else 1
    assert bracket(D, E) == bracket(E, D).scale(-s)


@given(st.integers(0, 1), st.integers(0, 1), st.data())
def test_divergence_of_bracket(pd, pe, data):
    # div [D,E] = D(div E) - (-1)^{|D||E|} E(div D)
    D = data.draw(hom_field(W12, pd))
    E = data.draw(hom_field(W12, pe))
    s = -1 if pd * pe else 1
    assert divergence(bracket(D, E)) == apply(D, divergence(E)) - apply(E, divergence(D)).scale(s)


@pytest.mark.parametrize("family,params,op", [
    ("H", H22, op_DH), ("K", K12, op_DK), ("HO", HO3, op_TH), ("KO", KO3, op_DKO)])
def test_realized_bracket_is_homomorphism(family, params, op):
    # D_X([a,b]_X) = [D_X a, D_X b] on random homogeneous pairs
    rng = np.random.default_rng(7)
    T = monomial_table(params)
    for _ in range(12):
        a = SuperPoly(params, {T.monos[rng.integers(T.size)]: 1})
        b = SuperPoly(params, {T.monos[rng.integers(T.size)]: int(rng.integers(1, 5))})
        assert op(bracket_O(family, a, b)) == bracket(op(a), op(b))


def test_hamiltonian_fields_are_divergence_free():
    T = monomial_table(H22)
    for mono in T.monos[::5]:
        assert divergence(op_DH(SuperPoly(H22, {mono: 1}))).is_zero()


def test_d_of_constant_vanishes():
    one = SuperPoly.one(H22)
    assert op_DH(one).is_zero()
    assert not op_DK(SuperPoly.one(K12)).is_zero()   # the contact field of 1 is 2 d_m


@pytest.mark.parametrize("params", [W12, H22])
def test_ad_matrix_matches_symbolic_bracket(params):
    ops = space_ops(params)
    T = ops.table
    rng = np.random.default_rng(3)
    for _ in range(4):
        mono, i = T.monos[rng.integers(T.size)], int(rng.integers(1, ops.N + 1))
        D = VectorField(params, {(mono, i): 1})
        A = ops.ad_w(field_to_w(D))
        for _ in range(6):
            mono2, j = T.monos[rng.integers(T.size)], int(rng.integers(1, ops.N + 1))
            E = VectorField(params, {(mono2, j): 1})
            got = (A @ field_to_w(E)) % params.p
            assert (got == field_to_w(bracket(D, E))).all()


@pytest.mark.parametrize("family,params,op", [("H", H22, op_DH), ("HO", HO3, op_TH), ("KO", KO3, op_DKO)])
def test_embedding_matrix_matches_operator(family, params, op):
    ops = space_ops(params)
    E = ops.embedding(family).tocsc()
    T = ops.table
    for k in range(0, T.size, max(1, T.size // 25)):
        col = E[:, k].toarray().ravel() % params.p
        assert (col == field_to_w(op(SuperPoly(params, {T.monos[k]: 1})))).all()


def test_div_matrix_matches_symbolic():
    ops = space_ops(W12)
    M = ops.div_matrix()
    rng = np.random.default_rng(5)
    T = ops.table
    for _ in range(20):
        D = VectorField(W12, {(T.monos[rng.integers(T.size)], int(rng.integers(1, 4))): 1})
        assert ((M @ field_to_w(D)) % 5 == poly_to_o(divergence(D))).all()


@pytest.mark.parametrize("lam", [0, 1, 2, 3, 4])
def test_odd_contact_kernel_just_below_the_top(lam):
    # Degree one below the top of KO(3): which of its elements does div_lambda kill?
    from cartan_super.field import nullspace_dense
    from cartan_super.vectorfields import div_lambda
    m, P = 3, KO3.p
    top = 2 * m + 1

    def weight(mono):
        return sum(mono.alpha) + sum(2 if j == top else 1 for j in mono.u)

    monos = monomial_table(KO3).monos
    w_max = max(weight(mo) for mo in monos)
    below = [mo for mo in monos if weight(mo) == w_max - 1]
    assert len(below) == 2 * m
    images = [div_lambda(SuperPoly(KO3, {mo: 1}), lam) for mo in below]
    targets = sorted({t for im in images for t in im.terms}, key=lambda t: t.sort_key())
    A = np.array([[im.terms.get(t, 0) for im in images] for t in targets], dtype=np.int64)
    kernel = nullspace_dense(A, P, ncols=len(below)).shape[0]
    if (m * lam + 1) % P:
        assert kernel == 0
    # and the built algebra agrees (z-degree of an O-element is its weight minus 2)
    from cartan_super.families import AlgebraSpec, build
    h = build(AlgebraSpec("SKO", m, P, (1,) * m, lam=lam))
    assert int(np.count_nonzero(h.deg == w_max - 3)) == kernel
