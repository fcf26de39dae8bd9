import itertools

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from cartan_super import dersolve as ds
from cartan_super.families import AlgebraSpec, build
from cartan_super.field import nullspace_dense
from cartan_super.operators import space_ops
from cartan_super.structure import TableAlgebra
from cartan_super.superspace import Monomial, SpaceParams, unit

P = 5


def dense_derivation_dim(h):
    """dim Der by the Leibniz law on every basis pair, one dense system (no blocking)."""
    n = h.dim
    ads = [h.ad(i).toarray() for i in range(n)]
    total = 0
    for rho in (0, 1):
        # unknowns D[z, x] with |z| = |x| + rho
        unk = [(z, x) for z in range(n) for x in range(n) if (h.par[z] - h.par[x] - rho) % 2 == 0]
        col = {u: k for k, u in enumerate(unk)}
        rows = []
        for x, y in itertools.product(range(n), repeat=2):
            s = -1 if rho * h.par[x] % 2 else 1
            for out in range(n):
                r = np.zeros(len(unk), dtype=np.int64)
                # D([x,y])_out
                for l in range(n):
                    if ads[x][l, y] and (out, l) in col:
                        r[col[(out, l)]] += ads[x][l, y]
                # -[D x, y]_out
                for j in range(n):
                    if ads[j][out, y] and (j, x) in col:
                        r[col[(j, x)]] -= ads[j][out, y]
                # -s [x, D y]_out
                for j in range(n):
                    if ads[x][out, j] and (j, y) in col:
                        r[col[(j, y)]] -= s * ads[x][out, j]
                if r.any():
                    rows.append(r % P)
        total += nullspace_dense(np.array(rows), P, ncols=len(unk)).shape[0] if rows else len(unk)
    return total


def test_abelian_fixtures():
    for par in ([0], [1]):
        rep = ds.der_full(TableAlgebra(P, par, {}))
        assert (rep.total, rep.inner, rep.outer) == (1, 0, 1)
    # gl(1|1): every map of an abelian superalgebra is a derivation
    rep = ds.der_full(TableAlgebra(P, [0, 1], {}))
    assert rep.total == 4


def test_heisenberg_against_dense_system():
    heis = TableAlgebra(P, [0, 0, 0], {(0, 1, 2): 1, (1, 0, 2): -1}, deg=[-1, -1, -2])
    rep = ds.der_full(heis)
    assert rep.total == dense_derivation_dim(heis) == 6
    assert rep.inner == 2


@pytest.mark.parametrize("spec", [AlgebraSpec("K", 1, P, (1,), n=2),
                                  AlgebraSpec("S", 1, P, (1,), n=2, variant="derived1")])
def test_block_solver_against_dense_system(spec):
    h = build(spec)
    table = TableAlgebra.from_handle(h)
    want = dense_derivation_dim(table)
    assert ds.der_full(h, mode="full").total == want
    assert ds.der_full(h, mode="weight_reduced").total == want


@pytest.mark.parametrize("spec", [AlgebraSpec("W", 1, P, (1,), n=2), AlgebraSpec("K", 1, P, (1,), n=2),
                                  AlgebraSpec("H", 2, P, (1, 1), n=2)])
def test_modes_agree(spec):
    h = build(spec)
    a, b = ds.der_full(h, mode="full"), ds.der_full(h, mode="weight_reduced")
    assert a.mode == "full" and b.mode == "weight_reduced"
    assert a.dims_by_block == b.dims_by_block


def test_no_room_for_very_negative_shifts():
    h = build(AlgebraSpec("W", 1, P, (1,), n=2))
    depth, height = 1, 5
    sol = ds.der_component_direct(h, -(height + depth) - 1, 0)
    assert sol.dim == 0


def test_degree_zero_contains_inner():
    h = build(AlgebraSpec("W", 1, P, (1,), n=2))
    sol = ds.der_component_direct(h, 0, 0)
    l0 = int(((h.deg == 0) & (h.par == 0)).sum())
    assert sol.dim >= l0


@settings(max_examples=15)
@given(st.data())
def test_solution_combinations_are_derivations(data):
    h = build(AlgebraSpec("K", 1, P, (1,), n=4, variant="derived1"))
    rep = _report(h)
    key = data.draw(st.sampled_from(sorted(k for k, s in rep.blocks.items() if s.dim)))
    sol = rep.blocks[key]
    coef = data.draw(st.lists(st.integers(0, P - 1), min_size=sol.dim, max_size=sol.dim))
    M = sum((mp.matrix * c for mp, c in zip(sol.maps, coef)), sp.csr_matrix((h.dim, h.dim), dtype=np.int64))
    phi = ds.LinearMap(M, P, key[1], key[0])
    assert ds.leibniz_all_pairs(h, phi)


_cache = {}


def _report(h):
    if h.spec not in _cache:
        _cache[h.spec] = ds.der_full(h)
    return _cache[h.spec]


def test_inner_candidates_and_witness():
    h = build(AlgebraSpec("H", 2, P, (1, 1), n=2))
    for b in (0, 7, 40):
        res = ds.check_candidate(h, ds.ad_map(h, np.eye(h.dim, dtype=np.int64)[b]))
        assert res["derivation"] and res["inner"]
        assert np.flatnonzero(res["witness"]).tolist() == [b]
    zero = ds.LinearMap(sp.csr_matrix((h.dim, h.dim), dtype=np.int64), P, 0, 0)
    assert ds.check_candidate(h, zero)["inner"]


def test_non_derivation_rejected():
    h = build(AlgebraSpec("K", 1, P, (1,), n=2))
    M = sp.identity(h.dim, dtype=np.int64, format="csr")
    assert not ds.check_candidate(h, ds.LinearMap(M, P, 0, 0))["derivation"]


def test_phi_kills_the_image_of_x1_x1tilde():
    h = build(AlgebraSpec("HO", 3, P, (1, 1, 1)))
    phi = ds.candidate_phi(h)
    ops = h.space.ops
    vec = np.zeros(h.space.size, dtype=np.int64)
    vec[ops.table.index[Monomial(unit(3, 1), (4,))] - h.space.offset] = 1
    # d1 d4 (x1 x4) is a constant, which is zero in the quotient by constants
    assert not phi(h.coords(vec)).any()
    assert (phi.parity, phi.zshift) == (1, -2)


def test_tau_on_constants_and_truncated_exponent():
    params = SpaceParams(3, 3, (1, 1, 1), P)
    tau = ds.tau_matrix(params).tocsc()
    T = space_ops(params).table
    assert tau[:, 0].nnz == 0
    # alpha_1 = p-1: the only surviving summand has a_1 = 0
    k = T.index[Monomial((P - 1, 0, 0), (5, 6))]
    assert tau[:, k].nnz == 0
    # alpha_1 = p-2, u = {5,6}: b = 0 so a_1 = 1/(p-1) = -1; d5 d6 (x5 x6) = -1;
    # x^(e1) x^((p-2)e1) = C(p-1,1) x^((p-1)e1)
    k = T.index[Monomial((P - 2, 0, 0), (5, 6))]
    col = tau[:, k]
    assert col.nnz == 1
    assert T.monos[col.indices[0]] == Monomial((P - 1, 0, 0), ())
    a1, d56, binom = -1, -1, P - 1
    assert col.data[0] % P == a1 * d56 * binom % P


def test_ppower_beyond_truncation_is_zero():
    h = build(AlgebraSpec("W", 1, P, (1,), n=2))
    assert ds.candidate_ad_ppower(h, 1, 1).is_zero
    assert ds.ppower_candidates(h) == []


def test_ppower_is_outer_on_t2():
    h = build(AlgebraSpec("W", 1, P, (2,), n=2))
    c = ds.candidate_ad_ppower(h, 1, 1)
    res = ds.check_candidate(h, c)
    assert res["derivation"] and not res["inner"]
    assert c.zshift == -P


def test_restrictedness():
    for params in (SpaceParams(1, 2, (1,), P), SpaceParams(1, 2, (2,), P)):
        for i in range(1, 4):
            assert ds.restrictedness_holds(params, i)


def test_l_count_by_enumeration():
    from math import comb
    for lam, m in itertools.product(range(P), range(3, 7)):
        want = sum(comb(m, k) for l in (0, 2) for k in range(m + 1) if (m * lam - m + 2 * k + l) % P == 0)
        assert ds.l_count(lam, m, P) == want
    assert ds.l_count(1, 3, P) == 1


@pytest.mark.parametrize("spec,value", [
    (AlgebraSpec("W", 2, P, (1, 1), n=2), 0),
    (AlgebraSpec("S", 2, P, (1, 1), n=2), 1),
    (AlgebraSpec("S", 2, P, (1, 1), n=2, variant="derived1"), 3),
    (AlgebraSpec("K", 1, P, (1,), n=4, variant="derived1"), 1),
    (AlgebraSpec("SKO", 3, P, (1, 1, 1), lam=1, variant="derived1"), 2),
    (AlgebraSpec("SHO", 3, P, (1, 1, 1), variant="derived2"), 15),
])
def test_expected_outer_values(spec, value):
    assert ds.expected_outer_dim(spec) == value


def test_blank_table_cells():
    with pytest.raises(ds.NotSpecified):
        ds.expected_outer_dim(AlgebraSpec("W", 1, P, (1,), n=2, variant="derived1"))
    with pytest.raises(ds.NotSpecified):
        ds.expected_outer_dim(AlgebraSpec("S", 1, P, (1,), n=2, variant="bar"))


def test_one_dimensional_outer_space_is_abelian():
    rep = ds.der_full(build(AlgebraSpec("S", 2, P, (1, 1), n=2)))
    assert rep.outer == 1 and rep.abelian and rep.outer_bracket == {}


def test_report_invariants_and_json():
    h = build(AlgebraSpec("H", 2, P, (1, 1), n=2, variant="derived1"))
    rep = ds.der_full(h)
    assert rep.total == rep.inner + rep.outer
    assert rep.inner == h.dim
    d = rep.to_json_dict()
    assert list(d)[:4] == ["spec", "mode", "dims_by_block", "total"]
    assert sum(d["dims_by_block"].values()) == rep.total
    for mp in rep.outer_maps:
        assert ds.is_derivation(h, mp)
    assert not rep.abelian


@pytest.mark.parametrize("variant", ["plain", "derived1"])
def test_hamiltonian_outer_algebra_is_a_scalar_extension(variant):
    # H(2,2;(1,1)): the degree-0 outer class acts by one nonzero scalar on
    # every other outer class, so the outer algebra is not abelian here.
    m, n = 2, 2
    spec = AlgebraSpec("H", m, P, (1, 1), n=n, variant=variant)
    h = build(spec)
    rep = ds.der_full(h, spec=spec)
    reps = [k for (k, _), sol in sorted(rep.blocks.items()) for _ in sol.outer_maps]
    table, abelian = ds.outer_bracket(h, rep)
    assert not abelian
    zero = reps.index(0)
    others = [i for i, k in enumerate(reps) if i != zero]
    scalars = {}
    for i in others:
        entry = table[(min(zero, i), max(zero, i))]
        assert set(entry) == {i}
        assert scalars.setdefault(reps[i], entry[i]) == entry[i]
    # only brackets with the degree-0 class survive
    assert set(table) == {(min(zero, i), max(zero, i)) for i in others}
    g = scalars[3]
    if variant == "derived1":
        # the top-degree class scales by (n - m - 2)/(-2) relative to the g_i
        assert scalars[8] * (-2) % P == g * (n - m - 2) % P
