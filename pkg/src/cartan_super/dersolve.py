"""Superderivations of a graded Lie superalgebra, solved block by block.

Two solvers are provided.

* ``direct``: one linear system per (degree shift k, parity r) whose unknowns
  are all admissible matrix entries and whose equations are the Leibniz law on
  generators times basis.  Used for small algebras and as a cross-check.
* ``propagation``: for a transitive algebra a derivation is pinned down by its
  values on the negative part (and on elements mapped into negative degrees).
  Those values become parameters; every other value is recovered degree by
  degree from [n, phi(y)] = +-(phi([n, y]) - [phi(n), y]) for n of negative
  degree, using the injectivity of z -> ([n, z])_n.  Consistency equations
  plus the Leibniz law on the remaining low-degree pairs cut the parameter
  space down to the derivations.  Only torus weight zero is solved; maps of
  nonzero weight are inner and are counted from ad(L).

Every returned derivation is re-verified against the Leibniz law.
"""

from __future__ import annotations

import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .families import AlgebraHandle, AlgebraSpec, OSpace, WSpace, _encode, xi
from .field import canon, echelon, nullspace_matrix, rref


def _sgn(e) -> int:
    return -1 if int(e) % 2 else 1


# ---------------------------------------------------------------------------
# linear maps

@dataclass
class LinearMap:
    """A homogeneous endomorphism of L, as a matrix in the basis of L."""

    matrix: sp.csr_matrix
    p: int
    parity: int
    zshift: int
    label: str = ""

    def __post_init__(self):
        self.matrix = canon(self.matrix, self.p)

    def __call__(self, coords) -> np.ndarray:
        return (self.matrix @ np.asarray(coords, dtype=np.int64)) % self.p

    @property
    def is_zero(self) -> bool:
        return self.matrix.nnz == 0

    def __add__(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.matrix + other.matrix, self.p, self.parity, self.zshift, self.label)

    def scaled(self, c: int) -> "LinearMap":
        return LinearMap(self.matrix * int(c), self.p, self.parity, self.zshift, self.label)


def ad_map(h, coords, label: str = "ad") -> LinearMap:
    coords = np.asarray(coords, dtype=np.int64) % h.p
    nz = np.flatnonzero(coords)
    par = int(h.par[nz[0]]) if nz.size else 0
    k = int(h.deg[nz[0]]) if nz.size else 0
    M = sp.csr_matrix((h.dim, h.dim), dtype=np.int64)
    for i in nz:
        M = M + h.ad(int(i)) * int(coords[i])
    return LinearMap(M, h.p, par, k, label)


def leibniz_defect(h, phi: LinearMap, gens=None):
    """First generator g with phi([g,y]) != [phi g, y] + (-1)^{|phi||g|}[g, phi y], or None.

    Checking generators against every y is equivalent to the full law: the set
    of x satisfying it for all y is a subalgebra.
    """
    gens = getattr(h, "generators", np.arange(h.dim)) if gens is None else gens
    M = phi.matrix
    Mc = sp.csc_matrix(M)
    for g in gens:
        g = int(g)
        A = h.ad(g)
        col = Mc[:, g]
        adphi = sp.csr_matrix((h.dim, h.dim), dtype=np.int64)
        for j, c in zip(col.indices, col.data):
            adphi = adphi + h.ad(int(j)) * int(c)
        D = M @ A - adphi - _sgn(phi.parity * h.par[g]) * (A @ M)
        if canon(D, h.p).nnz:
            return g
    return None


def is_derivation(h, phi: LinearMap) -> bool:
    return leibniz_defect(h, phi) is None


def leibniz_all_pairs(h, phi: LinearMap) -> bool:
    """Exhaustive Leibniz check on every basis pair (small algebras)."""
    return leibniz_defect(h, phi, gens=np.arange(h.dim)) is None


def _weight_vectors(h) -> np.ndarray:
    if hasattr(h, "weight_vectors"):
        return h.weight_vectors()
    w = np.asarray(getattr(h, "weights", np.zeros(h.dim)), dtype=np.int64)
    return w.reshape(-1, 1)


def map_weight(h, phi: LinearMap):
    """Torus weight of a homogeneous map, or None if it mixes weights."""
    wv = _weight_vectors(h)
    M = phi.matrix.tocoo()
    if M.nnz == 0:
        return tuple([0] * wv.shape[1])
    diff = (wv[M.row] - wv[M.col]) % h.p
    if (diff != diff[0]).any():
        return None
    return tuple(int(x) for x in diff[0])


# ---------------------------------------------------------------------------
# transported operators and candidates

def _from_space_operator(h: AlgebraHandle, Vmat, parity, zshift, label) -> LinearMap:
    """Restrict an operator on the realization space to L (must preserve L)."""
    img = sp.csr_matrix(Vmat @ h.basis_matrix)
    img = canon(img, h.p)
    coords = canon(img[h.pivots], h.p)
    back = canon(h.basis_matrix @ coords - img, h.p)
    if back.nnz:
        raise ValueError(f"{label} does not preserve {h.spec.label()}")
    return LinearMap(coords, h.p, parity, zshift, label)


def _o_operator_on_space(h: AlgebraHandle, Omat):
    if not isinstance(h.space, OSpace):
        raise ValueError("operator needs an O-realized algebra")
    off = h.space.offset
    return sp.csr_matrix(Omat)[off:, off:]


def candidate_phi(h: AlgebraHandle) -> LinearMap:
    """f -> sum_{i<=m} d_i d_{i~}(f) on the O-realization of HO."""
    if h.spec.family != "HO":
        raise ValueError("the map Phi is defined for HO")
    ops = h.space.ops
    m = h.params.m
    M = sp.csr_matrix((ops.size, ops.size), dtype=np.int64)
    for i in range(1, m + 1):
        M = M + ops.deriv_matrix(i) @ ops.deriv_matrix(i + m)
    return _from_space_operator(h, _o_operator_on_space(h, canon(M, h.p)), 1, -2, "Phi")


def tau_matrix(params) -> sp.csr_matrix:
    """The operator tau on O(3,3;t), applied verbatim monomial by monomial."""
    from .operators import space_ops
    if params.m != 3 or params.n != 3:
        raise ValueError("tau needs m = n = 3")
    p = params.p
    ops = space_ops(params)
    T = ops.table
    tilde = ops.ix.tilde
    odd = (T.mask[:, None] >> np.arange(3)[None, :]) & 1
    # b counts the j with alpha_j != 0 whose odd partner divides x^u
    b = ((T.alpha != 0) & (odd[:, [tilde(j) - 4 for j in (1, 2, 3)]] == 1)).sum(axis=1)
    out = sp.csr_matrix((T.size, T.size), dtype=np.int64)
    for i, j, l in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        ai = T.alpha[:, i - 1] + 1
        denom = ((1 + b) * ai) % p
        coef = np.array([pow(int(d), p - 2, p) if d else 0 for d in denom], dtype=np.int64)
        coef[ai % p == 0] = 0
        xi_vec = np.zeros(T.size, dtype=np.int64)
        xi_vec[ops.var_index(i)] = 1
        term = ops.mult_matrix(xi_vec) @ ops.deriv_matrix(tilde(j)) @ ops.deriv_matrix(tilde(l))
        out = out + term @ sp.diags(coef)
    return canon(out, p)


def candidate_theta(h: AlgebraHandle) -> LinearMap:
    """tau transported to the O-realization of SHO(3;t) or its derived algebras."""
    if h.spec.family != "SHO" or h.params.m != 3:
        raise ValueError("the map Theta is defined for SHO with m = 3")
    tau = tau_matrix(h.params)
    Vmat = _o_operator_on_space(h, tau)
    # parity and degree shift read off from the operator itself
    img = canon(Vmat @ h.basis_matrix, h.p).tocoo()
    piv_deg = h.space.vdeg
    piv_par = h.space.vpar
    src = h.pivots[img.col]
    shifts = set((piv_deg[img.row] - piv_deg[src]).tolist())
    pars = set(((piv_par[img.row] - piv_par[src]) % 2).tolist())
    if len(shifts) != 1 or len(pars) != 1:
        raise ValueError("Theta is not homogeneous")
    return _from_space_operator(h, Vmat, pars.pop(), shifts.pop(), "Theta")


def candidate_ad_ppower(h: AlgebraHandle, i: int, j: int) -> LinearMap:
    """D -> [d_i^(p^j), D] restricted to L."""
    ops = h.space.ops
    zd = int(h.space.zd[i - 1])
    if isinstance(h.space, WSpace):
        Vmat = ops.ppower_w(i, j)
    else:
        Vmat = _o_operator_on_space(h, ops.ppower_o(i, j))
    return _from_space_operator(h, Vmat, 0, -(h.p ** j) * zd, f"ad d{i}^(p^{j})")


def ppower_candidates(h: AlgebraHandle) -> list:
    out = []
    for i in range(1, h.params.m + 1):
        for j in range(1, h.params.t[i - 1]):
            out.append(candidate_ad_ppower(h, i, j))
    return out


def restrictedness_holds(params, i: int) -> bool:
    """(ad d_i)^(p^t_i) vanishes on W(m,n;t)."""
    from .operators import space_ops
    ops = space_ops(params)
    w = np.zeros(ops.size * ops.N, dtype=np.int64)
    w[0 * ops.N + i - 1] = 1
    A = ops.ad_w(w)
    e = params.p ** (params.t[i - 1] if i <= params.m else 1)
    P = sp.identity(A.shape[0], dtype=np.int64, format="csr")
    base, n = A, e
    while n:
        if n & 1:
            P = canon(P @ base, params.p)
        base = canon(base @ base, params.p)
        n >>= 1
    return P.nnz == 0


# ---------------------------------------------------------------------------
# block solutions

@dataclass
class BlockSolution:
    k: int
    rho: int
    method: str
    positions: tuple          # (rows, cols) of the coordinates used to identify a derivation
    basis: np.ndarray         # derivations, rows in coordinate space (echelon)
    maps: list                # LinearMap per basis row
    inner: np.ndarray         # echelon rows of inner derivations in coordinate space
    outer: np.ndarray = None  # echelon complement representatives
    outer_maps: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coords(self, M) -> np.ndarray:
        r, c = self.positions
        M = sp.csr_matrix(M)
        return np.asarray(M[r, c]).ravel().astype(np.int64) if len(r) else np.zeros(0, dtype=np.int64)


def _echelon_complement(basis: np.ndarray, inner: np.ndarray, p: int) -> np.ndarray:
    """Echelon rows spanning basis modulo inner, reduced against inner's pivots."""
    if basis.shape[0] == 0:
        return basis
    if inner.shape[0] == 0:
        return echelon(basis, p)
    R, piv = rref(inner, p)
    red = (basis - basis[:, piv] @ R) % p
    return echelon(red[red.any(axis=1)], p) if red.any() else np.zeros((0, basis.shape[1]), dtype=np.int64)


def _blocks_by_key(h, weighted: bool):
    w = np.asarray(h.weights) if weighted else np.zeros(h.dim, dtype=np.int64)
    table = {}
    for i in range(h.dim):
        table.setdefault((int(h.deg[i]), int(h.par[i]), int(w[i])), []).append(i)
    return {k: np.array(v, dtype=np.int64) for k, v in table.items()}


# direct solver -------------------------------------------------------------------

def der_component_direct(h, k: int, rho: int, weight_zero: bool = False) -> BlockSolution:
    """Solve the Leibniz system for all maps of degree k and parity rho."""
    n = h.dim
    p = h.p
    w = np.asarray(h.weights)
    uz, ux = [], []
    for x in range(n):
        sel = (h.deg == h.deg[x] + k) & (h.par == (h.par[x] + rho) % 2)
        if weight_zero:
            sel &= w == w[x]
        z = np.flatnonzero(sel)
        uz.append(z)
        ux.append(np.full(z.size, x))
    uz = np.concatenate(uz) if uz else np.zeros(0, dtype=np.int64)
    ux = np.concatenate(ux) if ux else np.zeros(0, dtype=np.int64)
    U = uz.size
    if U == 0:
        return BlockSolution(k, rho, "direct", (uz, ux), np.zeros((0, 0), dtype=np.int64), [],
                             np.zeros((0, 0), dtype=np.int64))
    gens = getattr(h, "generators", np.arange(n))
    rows, cols, vals = [], [], []
    uidx = np.arange(U)
    for gi, g in enumerate(gens):
        g = int(g)
        A = h.ad(g)
        off = gi * n * n
        # phi([g, y]): unknown (z, x) times ad_g[x, y] at (z, y)
        R1 = A[ux].tocoo()
        rows.append(off + uz[R1.row] * n + R1.col)
        cols.append(R1.row)
        vals.append(R1.data)
        # - (-1)^{rho|g|} [g, phi(y)]: unknown (z', y) times ad_g[z, z'] at (z, y)
        R3 = sp.csr_matrix(A.T)[uz].tocoo()
        rows.append(off + R3.col * n + ux[R3.row])
        cols.append(R3.row)
        vals.append(-_sgn(rho * h.par[g]) * R3.data)
        # - [phi(g), y]: unknown (j, g) times ad_j[z, y]
        for u in uidx[ux == g]:
            Aj = h.ad(int(uz[u])).tocoo()
            rows.append(off + Aj.row * n + Aj.col)
            cols.append(np.full(Aj.nnz, u))
            vals.append(-Aj.data)
    S = sp.csr_matrix((np.concatenate(vals) % p, (np.concatenate(rows), np.concatenate(cols))),
                      shape=(len(gens) * n * n, U))
    S = canon(S, p)
    S = S[np.diff(S.indptr) > 0]
    basis = nullspace_matrix(S, p)
    return _finish_block(h, k, rho, "direct", (uz, ux), basis, weight_zero)


def _finish_block(h, k, rho, method, positions, basis, weight_zero, to_matrix=None) -> BlockSolution:
    uz, ux = positions if to_matrix is None else (None, None)
    p = h.p
    maps = []
    for row in basis:
        if to_matrix is None:
            nz = np.flatnonzero(row)
            M = sp.csr_matrix((row[nz], (uz[nz], ux[nz])), shape=(h.dim, h.dim))
        else:
            M = to_matrix(row)
        maps.append(LinearMap(M, p, rho, k, "der"))
    sol = BlockSolution(k, rho, method, positions, basis, maps, np.zeros((0, basis.shape[1] if basis.ndim == 2 else 0), dtype=np.int64))
    inner_rows = []
    w = np.asarray(h.weights)
    for b in np.flatnonzero((h.deg == k) & (h.par == rho)):
        if weight_zero and w[b] != 0:
            continue
        inner_rows.append(sol.coords(h.ad(int(b))))
    ncoord = len(positions[0])
    inner = echelon(np.array(inner_rows, dtype=np.int64).reshape(len(inner_rows), ncoord), p) if inner_rows else np.zeros((0, ncoord), dtype=np.int64)
    sol.inner = inner
    if basis.shape[0]:
        if inner.shape[0]:
            both, _ = rref(np.vstack([basis, inner]), p)
            if both.shape[0] != basis.shape[0]:
                raise RuntimeError(f"inner derivations missing from the solution space at k={k}, parity={rho}")
        sol.outer = _echelon_complement(basis, inner, p)
        R, piv = rref(basis, p)
        for row in sol.outer:
            # the representative as a combination of solution rows
            sol.outer_maps.append(LinearMap(_combo_matrix(sol, row, R, piv), p, rho, k, "outer"))
    else:
        sol.outer = np.zeros((0, ncoord), dtype=np.int64)
    return sol


def _combo_matrix(sol: BlockSolution, row, R, piv):
    c = row[piv] % sol.maps[0].p
    M = None
    for ci, mp in zip(c, sol.maps):
        if ci:
            M = mp.matrix * int(ci) if M is None else M + mp.matrix * int(ci)
    return M if M is not None else sp.csr_matrix(sol.maps[0].matrix.shape, dtype=np.int64)


# propagation solver ---------------------------------------------------------------

class _Context:
    """Per-algebra data shared by the propagation blocks."""

    def __init__(self, h):
        self.h = h
        self.p = h.p
        self.wv = _weight_vectors(h)
        self.blocks = _blocks_by_key(h, weighted=True)
        self.pos = np.zeros(h.dim, dtype=np.int64)
        for idx in self.blocks.values():
            self.pos[idx] = np.arange(idx.size)
        self.neg = np.flatnonzero(h.deg < 0)
        self._csc = OrderedDict()
        self._nnz = 0

    CSC_CACHE_NNZ = 6_000_000

    def csc(self, i):
        A = self._csc.get(i)
        if A is None:
            A = sp.csc_matrix(self.h.ad(int(i)))
            self._csc[i] = A
            self._nnz += A.nnz
            while self._nnz > self.CSC_CACHE_NNZ and len(self._csc) > 1:
                _, old = self._csc.popitem(last=False)
                self._nnz -= old.nnz
        else:
            self._csc.move_to_end(i)
        return A

    def dense_block(self, i, rows, cols) -> np.ndarray:
        """ad(i)[rows, cols] densely; ad(i) is homogeneous so the image of cols lies in rows."""
        A = self.csc(i)
        out = np.zeros((rows.size, cols.size), dtype=np.int64)
        for c, col in enumerate(cols):
            r, d = _col(A, col)
            out[self.pos[r], c] = d
        return out

    def wcode_sum(self, a, b) -> int:
        return int(_encode(((self.wv[a] + self.wv[b]) % self.p).reshape(1, -1), self.p)[0])

    def tgt(self, y, k, rho):
        h = self.h
        return self.blocks.get((int(h.deg[y]) + k, (int(h.par[y]) + rho) % 2, int(h.weights[y])))


def der_component_propagated(h, k: int, rho: int, ctx: _Context | None = None) -> BlockSolution:
    """Weight-zero derivations of degree k and parity rho of a transitive algebra."""
    ctx = ctx or _Context(h)
    p = h.p
    deg, par = h.deg, h.par
    tg = {}
    for y in range(h.dim):
        t = ctx.tgt(y, k, rho)
        if t is not None:
            tg[y] = t
    free = [y for y in tg if deg[y] < 0 or deg[y] + k < 0]
    free_set = set(free)
    offs, P = {}, 0
    for y in free:
        offs[y] = P
        P += tg[y].size
    phi = {}
    for y in free:
        M = np.zeros((tg[y].size, P), dtype=np.int64)
        M[np.arange(tg[y].size), offs[y] + np.arange(tg[y].size)] = 1
        phi[y] = M
    constraints = []
    cache = {}
    det = sorted((y for y in tg if y not in free_set), key=lambda y: (deg[y], y))

    def equations(y):
        """Stacked A (rows x |tgt y|) and the right-hand side for D(n, y) = 0."""
        T0 = tg[y]
        key = (int(deg[y]), int(par[y]), int(h.weights[y]))
        blocks_n = []
        for n in ctx.neg:
            tk = (int(deg[y]) + k + int(deg[n]), (int(par[y]) + rho + int(par[n])) % 2, ctx.wcode_sum(y, n))
            Tn = ctx.blocks.get(tk)
            if Tn is not None:
                blocks_n.append((int(n), Tn))
        rhs = []
        for n, Tn in blocks_n:
            acc = np.zeros((Tn.size, P), dtype=np.int64)
            for l, c in zip(*_col(ctx.csc(n), y)):
                f = phi.get(int(l))
                if f is not None:
                    acc += int(c) * f
            fn = phi.get(n)
            if fn is not None:
                for jj, j in enumerate(tg[n]):
                    ci, cd = _col(ctx.csc(int(j)), y)
                    if ci.size and fn[jj].any():
                        v = np.zeros(Tn.size, dtype=np.int64)
                        v[ctx.pos[ci]] = cd
                        acc -= np.outer(v, fn[jj])
            rhs.append((_sgn(rho * par[n]) * acc) % p)
        if key not in cache:
            mats = [ctx.dense_block(n, Tn, T0) for n, Tn in blocks_n]
            A = np.vstack(mats) if mats else np.zeros((0, T0.size), dtype=np.int64)
            cache[key] = A
        RHS = np.vstack(rhs) if rhs else np.zeros((0, P), dtype=np.int64)
        return cache[key], RHS

    solvers = {}

    def solver(key, A):
        s = solvers.get(key)
        if s is None:
            r, c = A.shape
            R, piv = rref(np.hstack([A, np.eye(r, dtype=np.int64)]), p)
            if piv.size < c or (piv[:c] != np.arange(c)).any():
                raise RuntimeError("negative part acts non-injectively: the algebra is not transitive")
            s = (R[:c, c:], R[c:, c:])
            solvers[key] = s
        return s

    pending = np.zeros((0, P), dtype=np.int64)

    def push(rows):
        nonlocal pending
        rows = rows[rows.any(axis=1)] if rows.size else rows
        if rows.shape[0]:
            pending = np.vstack([pending, rows % p])
            if pending.shape[0] > 4 * P + 64:
                pending, _ = rref(pending, p)

    for y in det:
        A, RHS = equations(y)
        key = (int(deg[y]), int(par[y]), int(h.weights[y]))
        Lft, Ker = solver(key, A)
        phi[y] = (Lft @ RHS) % p
        if Ker.shape[0]:
            push((Ker @ RHS) % p)
    for y in free:
        A, RHS = equations(y)
        if A.shape[0]:
            push((A @ phi[y] - RHS) % p)
    if k < 0:
        _generator_constraints(h, ctx, k, rho, tg, phi, P, push)
    theta = nullspace_matrix(pending, p) if pending.shape[0] else np.eye(P, dtype=np.int64)

    fr_rows = np.concatenate([tg[y] for y in free]) if free else np.zeros(0, dtype=np.int64)
    fr_cols = np.concatenate([np.full(tg[y].size, y) for y in free]) if free else np.zeros(0, dtype=np.int64)
    items = [(y, f) for y, f in phi.items()]

    def to_matrix(th):
        r, c, v = [], [], []
        for y, f in items:
            col = (f @ th) % p
            nz = np.flatnonzero(col)
            if nz.size:
                r.append(tg[y][nz])
                c.append(np.full(nz.size, y))
                v.append(col[nz])
        if not r:
            return sp.csr_matrix((h.dim, h.dim), dtype=np.int64)
        return sp.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))), shape=(h.dim, h.dim))

    return _finish_block(h, k, rho, "propagation", (fr_rows, fr_cols), theta, True, to_matrix)


def _col(A: sp.csc_matrix, j):
    lo, hi = A.indptr[j], A.indptr[j + 1]
    return A.indices[lo:hi], A.data[lo:hi]


def _generator_constraints(h, ctx, k, rho, tg, phi, P, push):
    """Leibniz law on generators, for shifts where few elements have targets."""
    p = h.p
    n = h.dim
    if P == 0:
        return
    active = [y for y in tg if y in phi]
    for g in getattr(h, "generators", np.arange(n)):
        g = int(g)
        Ar = sp.csr_matrix(h.ad(g))
        Ac = ctx.csc(g)
        keys, mats = [], []
        # phi([g, y]) for brackets landing on active elements
        for l in active:
            lo, hi = Ar.indptr[l], Ar.indptr[l + 1]
            if lo == hi:
                continue
            f = phi[l]
            ys, cs = Ar.indices[lo:hi], Ar.data[lo:hi]
            z = np.repeat(tg[l], ys.size)
            keys.append(z * n + np.tile(ys, tg[l].size))
            mats.append((f[:, None, :] * cs[None, :, None]).reshape(-1, P))
        # -[phi(g), y]
        fg = phi.get(g)
        if fg is not None:
            for jj, j in enumerate(tg[g]):
                if not fg[jj].any():
                    continue
                Aj = h.ad(int(j)).tocoo()
                if Aj.nnz:
                    keys.append(Aj.row.astype(np.int64) * n + Aj.col)
                    mats.append(-Aj.data[:, None] * fg[jj][None, :])
        # -(-1)^{rho|g|}[g, phi(y)]
        s = _sgn(rho * h.par[g])
        for y in active:
            cols = tg[y]
            lens = Ac.indptr[cols + 1] - Ac.indptr[cols]
            if not lens.any():
                continue
            idx = np.concatenate([np.arange(Ac.indptr[c], Ac.indptr[c + 1]) for c in cols])
            rows = Ac.indices[idx]
            which = np.repeat(np.arange(cols.size), lens)
            keys.append(rows.astype(np.int64) * n + y)
            mats.append(-s * Ac.data[idx][:, None] * phi[y][which])
        if keys:
            K = np.concatenate(keys)
            uk, inv = np.unique(K, return_inverse=True)
            acc = np.zeros((uk.size, P), dtype=np.int64)
            np.add.at(acc, inv, np.vstack(mats) % p)
            push(acc % p)


# ---------------------------------------------------------------------------
# reports

@dataclass
class DerivationReport:
    spec: dict
    mode: str
    dims_by_block: dict
    total: int
    inner: int
    outer: int
    outer_maps: list
    outer_bracket: dict
    abelian: bool
    expected_outer: int | None
    matched_expected: bool | None
    runtime_ms: float
    blocks: dict = field(default_factory=dict, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec,
            "mode": self.mode,
            "dims_by_block": {f"{k},{r}": v for (k, r), v in sorted(self.dims_by_block.items())},
            "total": self.total,
            "inner": self.inner,
            "outer": self.outer,
            "expected_outer": self.expected_outer,
            "matched_expected": self.matched_expected,
            "abelian": self.abelian,
            "outer_reps": [{"parity": m.parity, "zshift": m.zshift, "nnz": int(m.matrix.nnz)} for m in self.outer_maps],
            "runtime_ms": round(self.runtime_ms, 1),
        }


def shift_range(h) -> range:
    if not h.dim:
        return range(0)
    lo, hi = int(h.deg.min()), int(h.deg.max())
    return range(lo - hi, hi - lo + 1)


def der_full(h, mode: str = "weight_reduced", check: bool = True, spec: AlgebraSpec | None = None) -> DerivationReport:
    """All superderivations, block by block; see the module docstring for the modes."""
    from .structure import center, is_transitive
    t0 = time.perf_counter()
    spec = spec or getattr(h, "spec", None)
    if mode not in ("full", "weight_reduced"):
        raise ValueError(f"unknown mode {mode}")
    if mode == "weight_reduced" and not ((h.deg < 0).any() and is_transitive(h)):
        mode = "full"
    ctx = _Context(h) if mode == "weight_reduced" else None
    w = np.asarray(h.weights)
    blocks, dims = {}, {}
    for k in shift_range(h):
        for rho in (0, 1):
            if mode == "full":
                sol = der_component_direct(h, k, rho)
                extra = 0
            else:
                sol = der_component_propagated(h, k, rho, ctx)
                extra = int(((h.deg == k) & (h.par == rho) & (w != 0)).sum())
            if check:
                for mp in sol.maps:
                    if leibniz_defect(h, mp) is not None:
                        raise RuntimeError(f"solver returned a non-derivation at k={k}, parity={rho}")
            blocks[(k, rho)] = sol
            if sol.dim + extra:
                dims[(k, rho)] = sol.dim + extra
    total = sum(dims.values())
    inner = h.dim - center(h).shape[0]
    outer_maps = [m for sol in blocks.values() for m in sol.outer_maps]
    rep = DerivationReport(
        spec=spec.as_dict() if spec is not None else {},
        mode=mode, dims_by_block=dims, total=total, inner=inner, outer=total - inner,
        outer_maps=outer_maps, outer_bracket={}, abelian=True, expected_outer=None,
        matched_expected=None, runtime_ms=0.0, blocks=blocks)
    if len(outer_maps) != rep.outer:
        raise RuntimeError("outer representatives do not match the outer dimension")
    rep.outer_bracket, rep.abelian = outer_bracket(h, rep)
    if spec is not None:
        try:
            rep.expected_outer = expected_outer_dim(spec)
            rep.matched_expected = rep.expected_outer == rep.outer
        except NotSpecified:
            pass
    rep.runtime_ms = (time.perf_counter() - t0) * 1000
    return rep


def compare_modes(a: DerivationReport, b: DerivationReport) -> bool:
    return a.dims_by_block == b.dims_by_block and a.outer == b.outer


def classify(sol: BlockSolution, M, p: int):
    """(in solution space, in inner span, outer coordinates) for a map of the block's shift."""
    v = sol.coords(M) % p
    if sol.basis.shape[0] == 0:
        return (not v.any(), not v.any(), np.zeros(0, dtype=np.int64))
    R, piv = rref(sol.basis, p)
    inside = not ((v - v[piv] @ R) % p).any()
    if sol.inner.shape[0]:
        Ri, pi = rref(sol.inner, p)
        red = (v - v[pi] @ Ri) % p
    else:
        red = v
    if sol.outer.shape[0]:
        Ro, po = rref(sol.outer, p)
        c = red[po] % p
        resid = (red - c @ Ro) % p
        if resid.any():
            c = None
    else:
        c = np.zeros(0, dtype=np.int64) if not red.any() else None
    return inside, not red.any(), c


def outer_bracket(h, rep: DerivationReport):
    """Brackets of outer representatives, reduced modulo inner derivations."""
    p = h.p
    reps = []
    for (k, rho), sol in sorted(rep.blocks.items()):
        for a, mp in enumerate(sol.outer_maps):
            reps.append((k, rho, a, mp))
    table = {}
    abelian = True
    for i in range(len(reps)):
        for j in range(i, len(reps)):
            ki, ri, ai, A = reps[i]
            kj, rj, aj, B = reps[j]
            C = canon(A.matrix @ B.matrix - _sgn(ri * rj) * (B.matrix @ A.matrix), p)
            key = (ki + kj, (ri + rj) % 2)
            sol = rep.blocks.get(key)
            if sol is None:
                if C.nnz:
                    raise RuntimeError("bracket of outer derivations left the computed range")
                continue
            inside, inner, c = classify(sol, C, p)
            if not inside and C.nnz:
                raise RuntimeError("bracket of derivations is not a derivation")
            if c is None:
                raise RuntimeError("outer bracket not expressible in outer representatives")
            if c.size and c.any():
                abelian = False
                base = [idx for idx, r in enumerate(reps) if (r[0], r[1]) == key]
                table[(i, j)] = {int(base[q]): int(x) for q, x in enumerate(c) if x}
    return table, abelian


def check_candidate(h, phi: LinearMap, rep: DerivationReport | None = None) -> dict:
    """Whether phi is a superderivation and whether it is inner (with a witness)."""
    result = {"derivation": is_derivation(h, phi), "inner": None, "witness": None}
    if not result["derivation"]:
        return result
    if phi.is_zero:
        result["inner"] = True
        result["witness"] = np.zeros(h.dim, dtype=np.int64)
        return result
    k, rho = phi.zshift, phi.parity
    cand = np.flatnonzero((h.deg == k) & (h.par == rho))
    if cand.size == 0:
        result["inner"] = False
        return result
    cols = [sp.csr_matrix(h.ad(int(b)).reshape(1, -1)) for b in cand]
    target = sp.csr_matrix(phi.matrix.reshape(1, -1))
    S = sp.vstack(cols + [target * -1]).T.tocsr()
    S = canon(S, h.p)
    S = S[np.diff(S.indptr) > 0]
    N = nullspace_matrix(S, h.p)
    hit = [row for row in N if row[-1] % h.p]
    if hit:
        row = hit[0]
        c = row[:-1] * pow(int(row[-1]), h.p - 2, h.p) % h.p
        wit = np.zeros(h.dim, dtype=np.int64)
        wit[cand] = c
        result["inner"] = True
        result["witness"] = wit
    else:
        result["inner"] = False
    return result


# ---------------------------------------------------------------------------
# expected values

class NotSpecified(ValueError):
    """No table value exists for this combination."""


def delta_prime(i: int, j: int, p: int) -> int:
    return int((i - j) % p == 0)


def l_count(lam: int, m: int, p: int) -> int:
    """Sum of binomials C(m,k) over the two solution sets of m*lam - m + 2k + l = 0 (l = 0, 2)."""
    from math import comb
    total = 0
    for l in (0, 2):
        for k in range(m + 1):
            if (m * lam - m + 2 * k + l) % p == 0:
                total += comb(m, k)
    return total


def expected_outer_dim(spec: AlgebraSpec) -> int:
    fam, m, n, p = spec.family, spec.m, spec.n, spec.p
    eta = spec.eta
    col = {"plain": 0, "derived1": 1, "derived2": 2}.get(spec.variant)
    if col is None:
        raise NotSpecified("no table value for bar variants")
    table = {
        "W": (eta - m, None, None),
        "S": (eta - m + 1, eta + 1, None),
        "H": (eta + 1, eta + 2, None),
        "K": (eta - m, eta - m + delta_prime(n - m, 3, p), None),
        "HO": (eta + 2, None, None),
        "SHO": (eta + 2, eta + 2 ** m + 2, eta + 2 ** m + 3 + int(m == 3)),
        "KO": (eta - m, None, None),
    }
    if fam == "SKO":
        lam = spec.lam
        base = eta - m + 1
        row = (base, base + l_count(lam, m, p), base + l_count(lam, m, p) + delta_prime(m * lam, -1, p))
    else:
        row = table[fam]
    val = row[col]
    if val is None:
        raise NotSpecified(f"no closed form for {fam} {spec.variant}")
    return val


def expected_height(spec: AlgebraSpec) -> int:
    """Height of X^(2) in the principal grading."""
    fam, m, n, p = spec.family, spec.m, spec.n, spec.p
    x = xi(spec)
    if fam in ("W", "KO"):
        return x - 1
    if fam in ("S", "HO"):
        return x - 2
    if fam == "H":
        return x - 3
    if fam == "SHO":
        return x - 5
    if fam == "SKO":
        return x - 3 if (m * spec.lam + 1) % p == 0 else x - 2
    if fam == "K":
        base = x + p ** spec.t[m - 1]
        return base - 4 if (n - m - 3) % p == 0 else base - 3
    raise NotSpecified(fam)


def expected_normalizer_extra(spec: AlgebraSpec) -> str:
    """What the normalizer adds to X: 'bar', 'bar+D', 'none', or 'x1x1~'."""
    return {"W": "none", "S": "bar", "H": "bar+D", "K": "none", "HO": "bar+D",
            "SHO": "bar+D", "KO": "none", "SKO": "x1x1~"}[spec.family]


def candidate_count(spec: AlgebraSpec) -> int:
    """delta_{X=HO} + delta_{L=SHO^(2), m=3} + (eta - m)."""
    extra = int(spec.family == "HO")
    extra += int(spec.family == "SHO" and spec.variant == "derived2" and spec.m == 3)
    return extra + spec.eta - spec.m


# ---------------------------------------------------------------------------
# reconstruction of Der from the normalizer and the candidates

@dataclass
class ReconstructionReport:
    der0_dim: int
    nor0_dim: int
    candidates: int
    predicted_dim: int
    contained: bool
    equal: bool
    full_dims: dict


def normalizer_maps(h: AlgebraHandle, nor, weight_zero: bool = True) -> list:
    """ad(D) restricted to L for a basis of the (weight-zero part of the) normalizer."""
    from .structure import w_coord_weights, w_to_basis
    W = h.w_space
    conv = w_to_basis(h)
    cw = w_coord_weights(h) if h.torus.shape[0] else np.zeros(W.size, dtype=np.int64)
    XT = sp.csr_matrix(h.w_rows.T)
    out = []
    for r in range(nor.dim):
        row = nor.rows[r]
        if weight_zero and (cw[row.indices] != 0).any():
            continue
        vec = np.zeros(W.size, dtype=np.int64)
        vec[row.indices] = row.data
        img = canon(W.ad(vec) @ XT, h.p)
        M = conv(sp.csr_matrix(img.T)).T
        first = row.indices[0]
        out.append(LinearMap(M, h.p, int(W.vpar[first]), int(W.vdeg[first]), "ad D"))
    return out


def reconstruct(h: AlgebraHandle, rep: DerivationReport, nor, extra_maps) -> ReconstructionReport:
    """Check Der_0 = ad(Nor_0)|_L + candidates, blockwise, in the solver's coordinates."""
    p = h.p
    maps = normalizer_maps(h, nor, weight_zero=rep.mode == "weight_reduced") + list(extra_maps)
    by_block = {}
    for mp in maps:
        by_block.setdefault((mp.zshift, mp.parity), []).append(mp)
    contained = True
    pred_total = 0
    for key, mps in by_block.items():
        sol = rep.blocks.get(key)
        vecs = []
        for mp in mps:
            if sol is None:
                if not mp.is_zero:
                    contained = False
                continue
            inside, _, _ = classify(sol, mp.matrix, p)
            contained &= inside
            vecs.append(sol.coords(mp.matrix))
        if vecs:
            R, _ = rref(np.array(vecs, dtype=np.int64), p)
            pred_total += R.shape[0]
    der0 = sum(sol.dim for sol in rep.blocks.values())
    nor0 = len(maps) - len(extra_maps)
    return ReconstructionReport(der0, nor0, len(extra_maps), pred_total, contained,
                                contained and pred_total == der0, dict(rep.dims_by_block))


def negative_der_dim(rep: DerivationReport) -> int:
    return sum(v for (k, _), v in rep.dims_by_block.items() if k < 0)
