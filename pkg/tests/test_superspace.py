import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cartan_super.superspace import (IndexMaps, Monomial, SpaceParams, SuperPoly, lucas_binom,
                                     monomial_table, partial, poly_mul, shuffle_sign, unit, zdeg)

PARAMS = SpaceParams(2, 2, (1, 1), 5)
PARAMS_T2 = SpaceParams(1, 2, (2,), 5)


@given(st.integers(0, 200), st.integers(0, 200), st.sampled_from([5, 7, 11]))
def test_lucas_matches_integer_binomial(a, b, p):
    assert lucas_binom(a, b, p) == math.comb(a, b) % p


def test_basis_count():
    # p^(t_1+...+t_m) even monomials times 2^n exterior ones
    assert monomial_table(PARAMS).size == 25 * 4
    assert monomial_table(PARAMS_T2).size == 25 * 4
    assert monomial_table(PARAMS).monos[0] == Monomial((0, 0), ())


def test_invalid_params():
    with pytest.raises(ValueError):
        SpaceParams(1, 1, (1,), 5)
    with pytest.raises(ValueError):
        SpaceParams(2, 2, (1,), 5)
    with pytest.raises(ValueError):
        SpaceParams(1, 2, (1,), 3)


def monomials(params):
    T = monomial_table(params)
    return st.integers(0, T.size - 1).map(lambda k: T.monos[k])


def polys(params):
    return st.lists(st.tuples(monomials(params), st.integers(1, params.p - 1)), max_size=4).map(
        lambda ts: SuperPoly(params, {m: c for m, c in ts}))


def homogeneous(params, parity):
    T = monomial_table(params)
    idx = [k for k in range(T.size) if T.monos[k].parity == parity]
    return st.lists(st.tuples(st.sampled_from(idx), st.integers(1, params.p - 1)), max_size=3).map(
        lambda ts: SuperPoly(params, {T.monos[k]: c for k, c in ts}))


def test_divided_power_product():
    x = SuperPoly.monomial(PARAMS_T2, (3,))
    y = SuperPoly.monomial(PARAMS_T2, (4,))
    # C(7,3) = 35 = 0 mod 5
    assert poly_mul(x, y).is_zero
    z = SuperPoly.monomial(PARAMS_T2, (5,))
    w = SuperPoly.monomial(PARAMS_T2, (6,))
    prod = poly_mul(z, w)
    assert prod == SuperPoly.monomial(PARAMS_T2, (11,), coef=math.comb(11, 5) % 5)


def test_odd_variables_anticommute():
    a = SuperPoly.var(PARAMS, 3)
    b = SuperPoly.var(PARAMS, 4)
    assert poly_mul(a, b) == -poly_mul(b, a)
    assert poly_mul(a, a).is_zero
    assert shuffle_sign((4,), (3,)) == -1


@given(polys(PARAMS), polys(PARAMS), polys(PARAMS))
def test_associative(f, g, h):
    assert poly_mul(poly_mul(f, g), h) == poly_mul(f, poly_mul(g, h))


@given(st.integers(0, 1), st.integers(0, 1), st.data())
def test_supercommutative(pf, pg, data):
    f = data.draw(homogeneous(PARAMS, pf))
    g = data.draw(homogeneous(PARAMS, pg))
    sign = -1 if pf * pg else 1
    assert poly_mul(f, g) == poly_mul(g, f).scale(sign)


@given(st.integers(1, 4), st.integers(0, 1), st.data())
def test_partial_is_left_superderivation(i, pf, data):
    f = data.draw(homogeneous(PARAMS, pf))
    g = data.draw(polys(PARAMS))
    sign = -1 if (i > PARAMS.m and pf) else 1
    lhs = partial(i, poly_mul(f, g))
    rhs = poly_mul(partial(i, f), g) + poly_mul(f, partial(i, g)).scale(sign)
    assert lhs == rhs


@given(st.integers(1, 4))
def test_table_derivative_matches_symbolic(i):
    T = monomial_table(PARAMS)
    tgt, coef = T.deriv(i)
    for k, mono in enumerate(T.monos):
        expect = partial(i, SuperPoly(PARAMS, {mono: 1}))
        got = SuperPoly(PARAMS, {T.monos[tgt[k]]: int(coef[k])} if tgt[k] >= 0 else {})
        assert got == expect


def test_table_multiplication_matches_symbolic():
    T = monomial_table(PARAMS)
    for k in range(0, T.size, 7):
        tgt, coef = T.mult(k)
        for j in range(0, T.size, 3):
            expect = poly_mul(SuperPoly(PARAMS, {T.monos[k]: 1}), SuperPoly(PARAMS, {T.monos[j]: 1}))
            got = SuperPoly(PARAMS, {T.monos[tgt[j]]: int(coef[j])} if tgt[j] >= 0 else {})
            assert got == expect


def test_grading_weights():
    mono = Monomial(unit(3, 3, 2), (4,))
    assert zdeg(mono, "W") == 3
    assert zdeg(mono, "K") == 5
    m = Monomial((0, 0, 0), (7,))
    assert zdeg(m, "KO") == 2


def test_index_involutions():
    ix = IndexMaps(4, 2)
    assert [ix.prime(i) for i in range(1, 7)] == [3, 4, 1, 2, 5, 6]
    assert [ix.sigma(i) for i in range(1, 5)] == [1, 1, -1, -1]
    ho = IndexMaps(3, 3)
    assert [ho.tilde(i) for i in range(1, 7)] == [4, 5, 6, 1, 2, 3]
