"""Structural analysis of graded Lie superalgebras: center, simplicity, heights, normalizers.

Everything here works on any object exposing ``dim``, ``p``, ``deg``, ``par``,
``weights`` (may be all zero) and ``ad(i)``, the matrix of ad(b_i) in the basis.
``TableAlgebra`` provides that interface for algebras given by structure
constants, which the tests use for small fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .field import canon, echelon, nullspace_matrix, rref
from .families import AlgebraHandle, WSpace, _encode, echelon_rows


class TableAlgebra:
    """A superalgebra given by structure constants; the bracket is not checked."""

    def __init__(self, p: int, par, consts: dict, deg=None, weights=None):
        self.p = p
        self.par = np.asarray(par, dtype=np.int64)
        self.dim = len(self.par)
        self.deg = np.zeros(self.dim, dtype=np.int64) if deg is None else np.asarray(deg, dtype=np.int64)
        self.weights = np.zeros(self.dim, dtype=np.int64) if weights is None else np.asarray(weights, dtype=np.int64)
        self.consts = {k: v % p for k, v in consts.items() if v % p}
        self._ad = {}

    def ad(self, i: int) -> sp.csr_matrix:
        if i not in self._ad:
            rows, cols, vals = [], [], []
            for (a, b, k), c in self.consts.items():
                if a == i:
                    rows.append(k)
                    cols.append(b)
                    vals.append(c)
            self._ad[i] = canon(sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim)), self.p)
        return self._ad[i]

    @property
    def generators(self):
        return np.arange(self.dim)

    @classmethod
    def from_handle(cls, h) -> "TableAlgebra":
        consts = {}
        for i in range(h.dim):
            A = h.ad(i).tocoo()
            for k, j, c in zip(A.row, A.col, A.data):
                consts[(i, int(j), int(k))] = int(c)
        return cls(h.p, h.par, consts, h.deg, getattr(h, "weights", None))


def _gens(h):
    g = getattr(h, "generators", None)
    return np.arange(h.dim) if g is None else np.asarray(g)


def _blocks(h) -> list:
    key = np.stack([h.deg, h.par, np.asarray(h.weights)], axis=1)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    return [np.flatnonzero(inv == b) for b in range(int(inv.max()) + 1)] if h.dim else []


def centralizer(h, elems, cols=None) -> np.ndarray:
    """Rows spanning {x in span(cols) : [e, x] = 0 for e in elems}, blockwise."""
    mats = [h.ad(int(e)) for e in elems]
    stack = canon(sp.vstack(mats), h.p).tocsc() if mats else None
    allowed = np.ones(h.dim, dtype=bool) if cols is None else np.isin(np.arange(h.dim), cols)
    blocks = [b[allowed[b]] for b in _blocks(h)]
    blocks = [b for b in blocks if b.size]
    out = []
    if stack is not None and blocks:
        # permute once so every block is a contiguous column range
        order = np.concatenate(blocks)
        stack = stack[:, order].tocsc()
    start = 0
    for blk in blocks:
        if stack is None:
            N = np.eye(blk.size, dtype=np.int64)
        else:
            a, b = stack.indptr[start], stack.indptr[start + blk.size]
            rows = stack.indices[a:b]
            if rows.size:
                # compact to the rows that actually occur in this block
                live, local = np.unique(rows, return_inverse=True)
                cols = np.repeat(np.arange(blk.size), np.diff(stack.indptr[start:start + blk.size + 1]))
                C = sp.csr_matrix((stack.data[a:b], (local.ravel(), cols)), shape=(live.size, blk.size))
                N = nullspace_matrix(C, h.p)
            else:
                N = np.eye(blk.size, dtype=np.int64)
        start += blk.size
        for row in N:
            v = np.zeros(h.dim, dtype=np.int64)
            v[blk] = row
            out.append(v)
    return np.array(out, dtype=np.int64).reshape(len(out), h.dim)


def center(h) -> np.ndarray:
    """Basis (rows, in basis coordinates) of the center."""
    return centralizer(h, _gens(h))


def height_depth(h) -> tuple:
    """(depth, height): minus the lowest and the highest occupied Z-degree."""
    if not h.dim:
        return (0, 0)
    return (-int(h.deg.min()), int(h.deg.max()))


def is_transitive(h) -> bool:
    """No nonzero element of nonnegative degree commutes with the whole negative part."""
    neg = np.flatnonzero(h.deg < 0)
    return centralizer(h, neg, np.flatnonzero(h.deg >= 0)).shape[0] == 0


# ---------------------------------------------------------------------------
# ideals

class _BlockSpan:
    """A subspace spanned by homogeneous vectors, stored as one echelon form per block."""

    def __init__(self, h):
        self.h = h
        key = np.stack([h.deg, h.par, np.asarray(h.weights)], axis=1)
        _, inv = np.unique(key, axis=0, return_inverse=True)
        self.bid = inv.ravel()
        self.members = {}
        for b in np.unique(self.bid):
            self.members[int(b)] = np.flatnonzero(self.bid == b)
        self.ech = {}
        self.dim = 0

    def add(self, vecs: sp.csr_matrix) -> sp.csr_matrix:
        """Insert rows; return the rows that enlarged the span (reduced, homogeneous)."""
        p = self.h.p
        vecs = canon(vecs, p)
        vecs = vecs[np.diff(vecs.indptr) > 0]
        if vecs.shape[0] == 0:
            return vecs
        first = vecs.indices[vecs.indptr[:-1]]
        bids = self.bid[first]
        fresh = []
        for b in np.unique(bids):
            b = int(b)
            cols = self.members[b]
            sub = vecs[np.flatnonzero(bids == b)][:, cols].toarray()
            old = self.ech.get(b)
            base = old if old is not None else np.zeros((0, cols.size), dtype=np.int64)
            R, _ = rref(np.vstack([base, sub]), p)
            if R.shape[0] > base.shape[0]:
                # new directions: reduce the candidates against the old span
                if base.shape[0]:
                    _, piv = rref(base, p)
                    red = (sub - sub[:, piv] @ base) % p
                else:
                    red = sub % p
                red = echelon(red, p)
                M = np.zeros((red.shape[0], self.h.dim), dtype=np.int64)
                M[:, cols] = red
                fresh.append(sp.csr_matrix(M))
                self.dim += R.shape[0] - base.shape[0]
                self.ech[b] = R
        if not fresh:
            return sp.csr_matrix((0, self.h.dim), dtype=np.int64)
        return sp.vstack(fresh).tocsr()


def ideal_closure_graded(h, vec) -> int:
    """Dimension of the ideal generated by a homogeneous element."""
    span = _BlockSpan(h)
    frontier = span.add(sp.csr_matrix(np.asarray(vec, dtype=np.int64).reshape(1, -1)))
    ads = [h.ad(int(g)) for g in _gens(h)]
    while frontier.shape[0]:
        FT = sp.csr_matrix(frontier.T)
        prods = [sp.csr_matrix((A @ FT).T) for A in ads]
        frontier = span.add(sp.vstack(prods).tocsr())
        if span.dim == h.dim:
            break
    return span.dim


def ideal_closure_dense(h, vec) -> int:
    p = h.p
    ads = [h.ad(int(g)).toarray() for g in _gens(h)]
    R, _ = rref(np.asarray(vec, dtype=np.int64).reshape(1, -1), p)
    frontier = R
    while frontier.shape[0]:
        prods = np.vstack([(frontier @ A.T) % p for A in ads])
        R2, _ = rref(np.vstack([R, prods]), p)
        if R2.shape[0] == R.shape[0]:
            break
        frontier = R2
        R = R2
    return R.shape[0]


def _projective_points(k: int, p: int):
    """One representative of each line in GF(p)^k."""
    for lead in range(k):
        rest = k - lead - 1
        for tail in range(p ** rest):
            v = np.zeros(k, dtype=np.int64)
            v[lead] = 1
            x = tail
            for j in range(rest):
                v[lead + 1 + j] = x % p
                x //= p
            yield v


@dataclass
class SimplicityReport:
    simple: bool
    method: str
    witness_dim: int | None = None
    points: int = 0
    notes: list = field(default_factory=list)


def simplicity(h, max_points: int = 4000) -> SimplicityReport:
    """Decide simplicity (graded ideals).

    For a transitive algebra every nonzero graded ideal meets the negative part,
    and since the torus lies in degree 0 the intersection contains a torus
    weight vector of fixed parity.  Checking the ideal generated by every such
    line is therefore complete.  Non-transitive algebras fall back to closing
    each basis vector, which can only certify non-simplicity.
    """
    if h.dim < 2:
        return SimplicityReport(False, "trivial")
    if all(h.ad(int(g)).nnz == 0 for g in _gens(h)):
        return SimplicityReport(False, "abelian")
    if (h.deg < 0).any() and is_transitive(h):
        neg = np.flatnonzero(h.deg < 0)
        key = np.stack([np.asarray(h.weights)[neg], h.par[neg]], axis=1)
        groups = {}
        for idx, k in zip(neg, map(tuple, key)):
            groups.setdefault(k, []).append(idx)
        count = 0
        for members in groups.values():
            members = np.array(members)
            homogeneous = np.unique(h.deg[members]).size == 1
            for coef in _projective_points(members.size, h.p):
                count += 1
                if count > max_points:
                    raise RuntimeError("too many negative weight lines for the simplicity test")
                vec = np.zeros(h.dim, dtype=np.int64)
                vec[members] = coef
                single = np.count_nonzero(coef) == 1
                if homogeneous or single:
                    d = ideal_closure_graded(h, vec)
                else:
                    d = ideal_closure_dense(h, vec)
                if d < h.dim:
                    return SimplicityReport(False, "negative-part lines", d, count)
        return SimplicityReport(True, "negative-part lines", None, count)
    for i in range(h.dim):
        vec = np.zeros(h.dim, dtype=np.int64)
        vec[i] = 1
        d = ideal_closure_graded(h, vec)
        if d < h.dim:
            return SimplicityReport(False, "basis closure", d, i + 1)
    return SimplicityReport(True, "basis closure", None, h.dim,
                            ["non-transitive: only basis vectors were closed"])


def is_simple(h) -> bool:
    return simplicity(h).simple


# ---------------------------------------------------------------------------
# super-Jacobi

@dataclass
class JacobiReport:
    ok: bool
    mode: str
    checked: int
    violation: tuple | None = None


def _sign(e) -> int:
    return -1 if e % 2 else 1


def check_jacobi(h, exhaustive_limit: int = 200, samples: int = 1000, seed: int = 0) -> JacobiReport:
    """Super-antisymmetry plus super-Jacobi on the structure constants."""
    p, par = h.p, h.par
    n = h.dim
    if n <= exhaustive_limit:
        ads = [h.ad(i) for i in range(n)]
        cols = [sp.csc_matrix(A) for A in ads]
        checked = 0
        for i in range(n):
            for j in range(i, n):
                s = _sign(par[i] * par[j])
                if canon(cols[i][:, j] + s * cols[j][:, i], p).nnz:
                    return JacobiReport(False, "exhaustive", checked, ("antisymmetry", i, j))
                diff = ads[i] @ ads[j] - s * (ads[j] @ ads[i])
                col = cols[i][:, j]
                for k, c in zip(col.indices, col.data):
                    diff = diff - int(c) * ads[k]
                diff = canon(diff, p)
                checked += 1
                if diff.nnz:
                    k = int(diff.tocoo().col[0])
                    return JacobiReport(False, "exhaustive", checked, ("jacobi", i, j, k))
        return JacobiReport(True, "exhaustive", checked)
    rng = np.random.default_rng(seed)
    pool = np.unique(rng.choice(n, size=min(n, 24), replace=False))
    ads = {int(i): h.ad(int(i)) for i in pool}
    checked = 0
    while checked < samples:
        i, j, k = (int(x) for x in rng.choice(pool, size=3))
        ei = np.zeros(n, dtype=np.int64)
        ek = np.zeros(n, dtype=np.int64)
        ei[i], ek[k] = 1, 1
        if ((ads[i][:, [j]].toarray().ravel() + _sign(par[i] * par[j]) * ads[j][:, [i]].toarray().ravel()) % p).any():
            return JacobiReport(False, "random", checked, ("antisymmetry", i, j))
        # (-1)^{|i||k|}[i,[j,k]] + (-1)^{|j||i|}[j,[k,i]] + (-1)^{|k||j|}[k,[i,j]] = 0
        t1 = ads[i] @ (ads[j] @ ek)
        t2 = ads[j] @ (ads[k] @ ei)
        t3 = ads[k] @ (ads[i][:, [j]].toarray().ravel())
        tot = (_sign(par[i] * par[k]) * t1 + _sign(par[j] * par[i]) * t2 + _sign(par[k] * par[j]) * t3) % p
        checked += 1
        if tot.any():
            return JacobiReport(False, "random", checked, ("jacobi", i, j, k))
    return JacobiReport(True, "random", checked)


def check_gradings(h) -> bool:
    """Structure constants respect degree, parity and torus weight."""
    w = np.asarray(h.weights)
    for i in range(h.dim):
        A = h.ad(i).tocoo()
        if A.nnz == 0:
            continue
        j, k = A.col, A.row
        if (h.deg[k] != h.deg[i] + h.deg[j]).any() or ((h.par[k] - h.par[i] - h.par[j]) % 2).any():
            return False
        if hasattr(h, "weight_vectors"):
            wv = h.weight_vectors()
            if ((wv[k] - wv[i] - wv[j]) % h.p).any():
                return False
        elif (w[k] != w[i] + w[j]).any() and w.any():
            return False
    return True


# ---------------------------------------------------------------------------
# normalizers

@dataclass
class Subspace:
    """A subspace of W given by echelon rows over the W coordinates."""

    space: WSpace
    rows: sp.csr_matrix
    notes: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.rows.shape[0]

    def __eq__(self, other):
        return isinstance(other, Subspace) and self.rows.shape == other.rows.shape \
            and canon(self.rows - other.rows, self.space.p).nnz == 0

    def contains(self, vecs) -> bool:
        vecs = canon(sp.csr_matrix(vecs), self.space.p)
        both = echelon_rows(self.space, sp.vstack([self.rows, vecs]))
        return both.shape[0] == self.dim

    def plus(self, vecs) -> "Subspace":
        return Subspace(self.space, echelon_rows(self.space, sp.vstack([self.rows, sp.csr_matrix(vecs)])))


def w_subspace(h: AlgebraHandle) -> Subspace:
    return Subspace(h.w_space, h.w_echelon)


def torus_w_vectors(h: AlgebraHandle) -> np.ndarray:
    out = [h.space.to_w @ h.vector(tc) % h.p for tc in h.torus]
    return np.array(out, dtype=np.int64).reshape(len(out), h.w_space.size)


def w_coord_weights(h: AlgebraHandle) -> np.ndarray:
    """Torus weight code of every W coordinate (the torus of h acts diagonally on W)."""
    W = h.w_space
    diags = []
    for t in torus_w_vectors(h):
        A = W.ad(t)
        diags.append(A.diagonal() % h.p)
        off = canon(A - sp.diags(A.diagonal()), h.p)
        if off.nnz:
            raise ValueError("torus is not diagonal on W")
    D = np.array(diags, dtype=np.int64).reshape(len(diags), W.size)
    return _encode(D.T, h.p) if D.shape[0] else np.zeros(W.size, dtype=np.int64)


def _residual_maps(h: AlgebraHandle, cols: np.ndarray):
    """Stacked [D, g] modulo L for generators g, as a matrix in the unknown columns."""
    W = h.w_space
    X = h.w_echelon
    piv = X.indices[X.indptr[:-1]]
    XT = sp.csr_matrix(X.T)
    mats = []
    for g in h.generators:
        gw = h.w_rows[int(g)].toarray().ravel()
        # [D, g] = -(-1)^{|D||g|} [g, D]; the sign is irrelevant for the kernel per block
        A = sp.csr_matrix(W.ad(gw))[:, cols]
        R = canon(A - XT @ A[piv], h.p)
        mats.append(R)
    return canon(sp.vstack(mats), h.p).tocsc()


def normalizer(h: AlgebraHandle, mode: str = "auto") -> Subspace:
    """{D in W : [D, L] in L}.

    ``mode="full"`` solves over all of W.  ``mode="reduced"`` solves only the
    torus-weight-zero part and adds the nonzero-weight part of L itself, which
    is exact once the centralizer of L in W is zero (checked; a nonzero weight
    D normalizing L acts as an inner derivation of nonzero weight).
    """
    W = h.w_space
    if mode == "auto":
        mode = "full" if W.size <= 4000 else "reduced"
    cw = w_coord_weights(h) if h.torus.shape[0] else np.zeros(W.size, dtype=np.int64)
    cols = np.arange(W.size) if mode == "full" else np.flatnonzero(cw == 0)
    S = _residual_maps(h, cols)
    key = np.stack([W.block_id[cols], cw[cols]], axis=1)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    order = np.argsort(inv, kind="stable")
    cuts = np.flatnonzero(np.diff(inv[order])) + 1
    pieces = []
    for grp in np.split(order, cuts):
        C = sp.csr_matrix(S[:, grp])
        C = C[np.diff(C.indptr) > 0]
        N = nullspace_matrix(C, h.p) if C.shape[0] else np.eye(grp.size, dtype=np.int64)
        if N.shape[0]:
            M = np.zeros((N.shape[0], W.size), dtype=np.int64)
            M[:, cols[grp]] = N
            pieces.append(sp.csr_matrix(M))
    notes = [f"mode={mode}"]
    if mode == "reduced":
        moving = np.flatnonzero(h.weights != 0)
        if moving.size:
            pieces.append(h.w_rows[moving])
        cent = centralizer_in_w(h, cols)
        if cent:
            raise ValueError("centralizer of L in W is nonzero; weight reduction does not apply")
        notes.append("centralizer in W is zero")
    rows = echelon_rows(W, sp.vstack(pieces)) if pieces else sp.csr_matrix((0, W.size), dtype=np.int64)
    return Subspace(W, rows, notes)


def centralizer_in_w(h: AlgebraHandle, cols=None) -> int:
    """dim of {D in W : [D, L] = 0}; only weight-zero D can occur since the torus lies in L."""
    W = h.w_space
    if cols is None:
        cw = w_coord_weights(h) if h.torus.shape[0] else np.zeros(W.size, dtype=np.int64)
        cols = np.flatnonzero(cw == 0)
    mats = []
    for g in h.generators:
        gw = h.w_rows[int(g)].toarray().ravel()
        mats.append(sp.csr_matrix(W.ad(gw))[:, cols])
    S = canon(sp.vstack(mats), h.p).tocsc()
    total = 0
    bid = W.block_id[cols]
    for b in np.unique(bid):
        grp = np.flatnonzero(bid == b)
        C = sp.csr_matrix(S[:, grp])
        C = C[np.diff(C.indptr) > 0]
        total += nullspace_matrix(C, h.p).shape[0] if C.shape[0] else grp.size
    return total


def w_to_basis(h: AlgebraHandle):
    """Function sending W-vectors (rows) lying in L to basis coordinates."""
    X = h.w_echelon
    piv = X.indices[X.indptr[:-1]]
    P = sp.csr_matrix(h.w_rows[:, piv])
    ncomp, lab = connected_components(P, directed=False) if P.shape[0] else (0, np.zeros(0, dtype=np.int64))
    # P is square; invert it block by block
    inv_rows, inv_cols, inv_vals = [], [], []
    for c in range(ncomp):
        idx = np.flatnonzero(lab == c)
        sub = P[idx][:, idx].toarray()
        aug = np.hstack([sub, np.eye(idx.size, dtype=np.int64)])
        R, pv = rref(aug, h.p)
        if pv.size < idx.size or pv[idx.size - 1] >= idx.size:
            raise ValueError("W images of the basis are not independent")
        Inv = R[:, idx.size:]
        r, cc = np.nonzero(Inv)
        inv_rows.append(idx[r])
        inv_cols.append(idx[cc])
        inv_vals.append(Inv[r, cc])
    Pinv = sp.csr_matrix((np.concatenate(inv_vals), (np.concatenate(inv_rows), np.concatenate(inv_cols))),
                         shape=P.shape) if ncomp else sp.csr_matrix(P.shape, dtype=np.int64)

    def convert(vecs) -> np.ndarray:
        V = sp.csr_matrix(vecs)
        C = canon(V[:, piv] @ Pinv, h.p)
        back = canon(C @ h.w_rows - V, h.p)
        if back.nnz:
            raise ValueError("vector outside the algebra")
        return C

    return convert


def structure_report(h, with_normalizer: bool = False) -> dict:
    depth, height = height_depth(h)
    rep = {"dim": h.dim, "depth": depth, "height": height, "center_dim": int(center(h).shape[0]),
           "simple": bool(is_simple(h))}
    if with_normalizer:
        rep["normalizer_dim"] = normalizer(h).dim
    return rep
