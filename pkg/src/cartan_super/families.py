"""Construction of the eight Cartan-type families as explicit subalgebras.

A handle stores its basis as coordinate rows in a *realization space* V:

* ``WSpace``: V = W(m,n;t), coordinates ``mono * N + (i - 1)``.
* ``OSpace``: V = O(m,n;t) (or O modulo constants) with the transported
  bracket of H, K, HO or KO.  Every O-coordinate maps to a field through the
  injective map D_X, so these handles still sit inside W.

Bases are reduced row echelon forms over the canonical coordinate order of V,
computed block by block.  A block collects coordinates of equal Z-degree,
parity and weight under a family-specific set of torus functionals; every
subspace built here is homogeneous for that grading, so blockwise echelon
forms assemble into the global one.
"""

from __future__ import annotations

import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .field import canon, echelon, nullspace_matrix, rref
from .operators import space_ops
from .superspace import FAMILIES, IndexMaps, SpaceParams, zd_weights
from .vectorfields import VectorField

VARIANTS = ("plain", "bar", "derived1", "derived2")
BAR_FAMILIES = ("S", "H", "HO", "SHO")


class SpecError(ValueError):
    """An algebra specification violates a family constraint."""


@dataclass(frozen=True)
class AlgebraSpec:
    family: str
    m: int
    p: int
    t: tuple
    n: int | None = None
    variant: str = "plain"
    lam: int | None = None
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        fam = self.family
        if fam not in FAMILIES:
            raise SpecError(f"unknown family {fam!r}")
        if self.variant not in VARIANTS:
            raise SpecError(f"unknown variant {self.variant!r}")
        t = tuple(int(x) for x in (self.t if isinstance(self.t, (tuple, list)) else (self.t,)))
        if len(t) == 1 and self.m > 1:
            t = t * self.m
        object.__setattr__(self, "t", t)
        n = self.n
        if fam in ("HO", "SHO"):
            if n is not None and n != self.m:
                raise SpecError(f"{fam} requires n = m")
            n = self.m
        elif fam in ("KO", "SKO"):
            if n is not None and n != self.m + 1:
                raise SpecError(f"{fam} requires n = m+1")
            n = self.m + 1
        elif n is None:
            raise SpecError(f"{fam} requires n")
        object.__setattr__(self, "n", n)
        notes = []
        if fam == "H" and self.m % 2:
            raise SpecError("H requires even m")
        if fam == "K" and self.m % 2 == 0:
            raise SpecError("K requires odd m")
        if fam in ("HO", "SHO", "KO", "SKO") and self.m <= 2:
            raise SpecError(f"{fam} requires m > 2")
        if fam == "SKO":
            if self.lam is None:
                raise SpecError("SKO requires lambda")
            object.__setattr__(self, "lam", int(self.lam) % self.p)
            if self.m == 3:
                notes.append("m=3 outside the range m>3 where div_lambda is defined; results are not asserted")
        elif self.lam is not None:
            object.__setattr__(self, "lam", None)
        if self.variant == "bar" and fam not in BAR_FAMILIES:
            raise SpecError(f"bar variant is defined only for {', '.join(BAR_FAMILIES)}")
        if len(t) != self.m:
            raise SpecError(f"t needs {self.m} entries")
        try:
            SpaceParams(self.m, n, t, self.p)
        except ValueError as exc:
            raise SpecError(str(exc)) from None
        object.__setattr__(self, "warnings", tuple(notes))

    @property
    def params(self) -> SpaceParams:
        return SpaceParams(self.m, self.n, self.t, self.p)

    @property
    def eta(self) -> int:
        return sum(self.t)

    def with_variant(self, variant: str) -> "AlgebraSpec":
        return AlgebraSpec(self.family, self.m, self.p, self.t, self.n, variant, self.lam)

    def label(self) -> str:
        t = "(" + ",".join(map(str, self.t)) + ")"
        if self.family in ("HO", "SHO", "KO", "SKO"):
            core = f"{self.family}({self.m};{t})"
        else:
            core = f"{self.family}({self.m},{self.n};{t})"
        if self.variant == "bar":
            core = "bar " + core
        elif self.variant == "derived1":
            core += "^(1)"
        elif self.variant == "derived2":
            core += "^(2)"
        if self.lam is not None:
            core += f"[lambda={self.lam}]"
        return core

    def as_dict(self) -> dict:
        return {"family": self.family, "variant": self.variant, "m": self.m, "n": self.n,
                "p": self.p, "t": list(self.t), "lambda": self.lam}


# ---------------------------------------------------------------------------
# torus functionals used for blocking

def torus_functionals(family: str, m: int, n: int) -> np.ndarray:
    """Rows are functionals on exponent vectors that every family member is graded by."""
    N = m + n
    rows = []
    if family in ("W", "S"):
        rows = [np.eye(N, dtype=np.int64)[i] for i in range(N)]
    elif family in ("H", "K"):
        r = m // 2
        for k in range(r):
            v = np.zeros(N, dtype=np.int64)
            v[k], v[k + r] = 1, -1
            rows.append(v)
    else:
        for k in range(m):
            v = np.zeros(N, dtype=np.int64)
            v[k + m], v[k] = 1, -1
            rows.append(v)
    return np.array(rows, dtype=np.int64).reshape(len(rows), N)


def _encode(vals: np.ndarray, p: int) -> np.ndarray:
    """Mixed-radix code of rows of residues."""
    vals = np.asarray(vals, dtype=np.int64) % p
    code = np.zeros(vals.shape[0], dtype=np.int64)
    for k in range(vals.shape[1]):
        code = code * p + vals[:, k]
    return code


# ---------------------------------------------------------------------------
# realization spaces

class Space:
    """Common interface of the coordinate spaces handles live in."""

    kind = ""
    family = ""

    def __init__(self, params: SpaceParams, grading_family: str):
        self.params = params
        self.p = params.p
        self.ops = space_ops(params)
        self.zd = np.array(zd_weights(grading_family, params.m, params.n), dtype=np.int64)
        self.functionals = torus_functionals(grading_family, params.m, params.n)

    @cached_property
    def block_id(self) -> np.ndarray:
        key = np.stack([self.vdeg, self.vpar, self.vtkey], axis=1)
        _, inv = np.unique(key, axis=0, return_inverse=True)
        return inv.ravel()

    @cached_property
    def blocks(self) -> list:
        order = np.argsort(self.block_id, kind="stable")
        ids = self.block_id[order]
        cuts = np.flatnonzero(np.diff(ids)) + 1
        return np.split(order, cuts)

    def block_key(self, v: int) -> tuple:
        return (int(self.vdeg[v]), int(self.vpar[v]), int(self.vtkey[v]))


class WSpace(Space):
    kind = "W"

    def __init__(self, params, grading_family):
        super().__init__(params, grading_family)
        self.family = grading_family
        ops = self.ops
        self.size = ops.size * ops.N
        exps = ops.table.exps[ops.wmono].copy()
        exps[np.arange(self.size), ops.wdir - 1] -= 1
        self.vexps = exps
        self.vdeg = ops.table.zdeg(self.zd)[ops.wmono] - self.zd[ops.wdir - 1]
        self.vpar = ops.wpar
        self.vtkey = _encode(exps @ self.functionals.T, self.p) if len(self.functionals) else np.zeros(self.size, dtype=np.int64)

    def ad(self, vec) -> sp.csr_matrix:
        return self.ops.ad_w(vec)

    @cached_property
    def to_w(self) -> sp.csr_matrix:
        return sp.identity(self.size, dtype=np.int64, format="csr")

    def coord_text(self, v: int) -> str:
        k, j = divmod(v, self.ops.N)
        return f"{self.ops.table.monos[k].text()}*d/dx[{j + 1}]"


class OSpace(Space):
    """O or O/F1 carrying the bracket transported through D_X."""

    kind = "O"
    SHIFTS = {"H": 0, "K": 0, "HO": 1, "KO": 1}

    def __init__(self, params, bracket_family, grading_family):
        super().__init__(params, grading_family)
        self.family = bracket_family
        ops = self.ops
        self.drop_const = bracket_family in ("H", "HO")
        self.offset = 1 if self.drop_const else 0
        self.size = ops.size - self.offset
        sl = slice(self.offset, None)
        exps = ops.table.exps[sl]
        self.vexps = exps
        self.vdeg = ops.table.zdeg(self.zd)[sl] - 2
        self.vpar = (ops.table.parity[sl] + self.SHIFTS[bracket_family]) % 2
        self.vtkey = _encode(exps @ self.functionals.T, self.p) if len(self.functionals) else np.zeros(self.size, dtype=np.int64)

    def pad(self, vec):
        vec = np.asarray(vec, dtype=np.int64)
        if self.offset:
            return np.concatenate([np.zeros(self.offset, dtype=np.int64), vec])
        return vec

    def ad(self, vec) -> sp.csr_matrix:
        A = self.ops.ad_o(self.family, self.pad(vec))
        if self.offset:
            A = A[self.offset:, self.offset:]
        return sp.csr_matrix(A)

    @cached_property
    def to_w(self) -> sp.csr_matrix:
        E = self.ops.embedding(self.family)
        return sp.csr_matrix(E[:, self.offset:])

    def coord_text(self, v: int) -> str:
        return self.ops.table.monos[v + self.offset].text()


# ---------------------------------------------------------------------------
# blockwise echelon forms

def _rows_from_blocks(space: Space, pieces) -> sp.csr_matrix:
    """Assemble (coords, dense rows) pieces into one globally sorted RREF matrix."""
    rows, cols, vals, lead = [], [], [], []
    count = 0
    for coords, R in pieces:
        if R.shape[0] == 0:
            continue
        nz_r, nz_c = np.nonzero(R)
        rows.append(nz_r + count)
        cols.append(coords[nz_c])
        vals.append(R[nz_r, nz_c])
        lead.append(coords[np.argmax(R != 0, axis=1)])
        count += R.shape[0]
    if not count:
        return sp.csr_matrix((0, space.size), dtype=np.int64)
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(count, space.size), dtype=np.int64)
    order = np.argsort(np.concatenate(lead), kind="stable")
    return canon(M[order], space.p)


def echelon_rows(space: Space, M) -> sp.csr_matrix:
    """Canonical basis of the span of the (homogeneous) rows of M."""
    M = canon(M, space.p)
    M = M[np.diff(M.indptr) > 0]
    if M.shape[0] == 0:
        return sp.csr_matrix((0, space.size), dtype=np.int64)
    first = M.indices[M.indptr[:-1]]
    bid = space.block_id[first]
    pieces = []
    for b in np.unique(bid):
        sel = M[np.flatnonzero(bid == b)]
        coords = space.blocks[b]
        sub = sel[:, coords]
        if sub.nnz != sel.nnz:
            raise ValueError("inhomogeneous vector in echelon_rows")
        R, _ = rref(sub.toarray(), space.p)
        pieces.append((coords, R))
    return _rows_from_blocks(space, pieces)


def kernel_rows(space: Space, cond, allowed=None) -> sp.csr_matrix:
    """Basis of {v in V : C v = 0}, where ``cond(parity)`` gives the csr matrix C."""
    mats = {a: sp.csc_matrix(cond(a)) for a in (0, 1)}
    pieces = []
    for coords in space.blocks:
        if allowed is not None:
            coords = coords[allowed[coords]]
            if coords.size == 0:
                continue
        C = mats[int(space.vpar[coords[0]])][:, coords]
        C = sp.csr_matrix(C)
        C = C[np.diff(C.indptr) > 0]
        N = nullspace_matrix(C, space.p) if C.shape[0] else np.eye(coords.size, dtype=np.int64)
        pieces.append((coords, N))
    return _rows_from_blocks(space, pieces)


def full_rows(space: Space) -> sp.csr_matrix:
    return sp.identity(space.size, dtype=np.int64, format="csr")


# ---------------------------------------------------------------------------
# handles

class AlgebraHandle:
    """A graded subalgebra given by an echelon basis inside a realization space."""

    def __init__(self, spec: AlgebraSpec, space: Space, rows: sp.csr_matrix, parent=None):
        self.spec = spec
        self.space = space
        self.rows = canon(rows, space.p)
        self.p = space.p
        self.dim = self.rows.shape[0]
        self.parent = parent
        self.pivots = self.rows.indices[self.rows.indptr[:-1]] if self.dim else np.zeros(0, dtype=np.int64)
        self.deg = space.vdeg[self.pivots]
        self.par = space.vpar[self.pivots]
        self.tkey = space.vtkey[self.pivots]
        self._ad = OrderedDict()
        self._ad_nnz = 0
        self._weights = None

    def __repr__(self):
        return f"AlgebraHandle({self.spec.label()}, dim={self.dim})"

    @property
    def params(self) -> SpaceParams:
        return self.space.params

    @cached_property
    def basis_matrix(self) -> sp.csr_matrix:
        """V x dim matrix whose columns are the basis vectors."""
        return sp.csr_matrix(self.rows.T)

    def vector(self, coords) -> np.ndarray:
        """V-coordinates of an element given by its basis coordinates."""
        return (self.basis_matrix @ np.asarray(coords, dtype=np.int64)) % self.p

    def coords(self, vec, check: bool = True) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.int64) % self.p
        c = vec[self.pivots]
        if check and (((self.basis_matrix @ c) - vec) % self.p).any():
            raise ValueError("vector is not in the algebra")
        return c

    def ad_v(self, i: int) -> sp.csr_matrix:
        """ad of basis element i acting on the whole realization space."""
        row = self.rows[i]
        vec = np.zeros(self.space.size, dtype=np.int64)
        vec[row.indices] = row.data
        return self.space.ad(vec)

    AD_CACHE_NNZ = 8_000_000

    def ad(self, i: int) -> sp.csr_matrix:
        """Matrix of ad(b_i) in the basis of the algebra (LRU-cached by total size)."""
        A = self._ad.get(i)
        if A is not None:
            self._ad.move_to_end(i)
            return A
        full = self.ad_v(i) @ self.basis_matrix
        A = canon(sp.csr_matrix(full)[self.pivots], self.p)
        self._ad[i] = A
        self._ad_nnz += A.nnz
        while self._ad_nnz > self.AD_CACHE_NNZ and len(self._ad) > 1:
            _, old = self._ad.popitem(last=False)
            self._ad_nnz -= old.nnz
        return A

    def ad_of(self, coords) -> sp.csr_matrix:
        coords = np.asarray(coords, dtype=np.int64) % self.p
        out = sp.csr_matrix((self.dim, self.dim), dtype=np.int64)
        for i in np.flatnonzero(coords):
            out = out + self.ad(int(i)) * int(coords[i])
        return canon(out, self.p)

    def drop_cache(self):
        self._ad.clear()
        self._ad_nnz = 0

    def bracket(self, x, y) -> np.ndarray:
        """Bracket of two elements given in basis coordinates."""
        return (self.ad_of(x) @ np.asarray(y, dtype=np.int64)) % self.p

    def closure_defect(self, i: int) -> int:
        """Number of nonzero entries of ad(b_i)(L) outside L (0 for a subalgebra)."""
        full = sp.csr_matrix(self.ad_v(i) @ self.basis_matrix)
        resid = canon(full - self.basis_matrix @ full[self.pivots], self.p)
        return resid.nnz

    # gradings ---------------------------------------------------------------
    def degree_range(self) -> tuple:
        return (int(self.deg.min()), int(self.deg.max())) if self.dim else (0, 0)

    def dims_by_degree(self) -> dict:
        vals, counts = np.unique(self.deg, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    def parity_counts(self) -> dict:
        return {"even": int((self.par == 0).sum()), "odd": int((self.par == 1).sum())}

    def indices(self, deg=None, par=None, weight=None) -> np.ndarray:
        sel = np.ones(self.dim, dtype=bool)
        if deg is not None:
            sel &= self.deg == deg
        if par is not None:
            sel &= self.par == par
        if weight is not None:
            sel &= self.weights == weight
        return np.flatnonzero(sel)

    # W embedding --------------------------------------------------------------
    @cached_property
    def w_rows(self) -> sp.csr_matrix:
        """The basis pushed into W (rows are W-coordinate vectors, not echelonized)."""
        return canon(sp.csr_matrix((self.space.to_w @ self.basis_matrix).T), self.p)

    @cached_property
    def w_space(self) -> WSpace:
        return WSpace(self.params, self.spec.family)

    @cached_property
    def w_echelon(self) -> sp.csr_matrix:
        return echelon_rows(self.w_space, self.w_rows)

    def basis_fields(self) -> list:
        T = self.space.ops.table
        N = self.space.ops.N
        out = []
        for i in range(self.dim):
            row = self.w_rows[i]
            terms = {}
            for w, c in zip(row.indices, row.data):
                k, j = divmod(int(w), N)
                terms[(T.monos[k], j + 1)] = int(c)
            out.append(VectorField(self.params, terms))
        return out

    def basis_text(self) -> list:
        out = []
        for i in range(self.dim):
            row = self.rows[i]
            parts = [f"{int(c)}*{self.space.coord_text(int(v))}" for v, c in zip(row.indices, row.data)]
            out.append(" + ".join(parts))
        return out

    # torus and weights ----------------------------------------------------------
    @cached_property
    def torus(self) -> np.ndarray:
        """Basis coordinates (rows) of L intersected with the diagonal torus of W."""
        blk = np.flatnonzero((self.deg == 0) & (self.par == 0) & (self.tkey == 0))
        N = self.space.ops.N
        tvecs = np.zeros((N, self.space.ops.size * N), dtype=np.int64)
        for i in range(1, N + 1):
            k = self.space.ops.var_index(i)
            tvecs[i - 1, k * N + i - 1] = 1
        if blk.size == 0:
            return np.zeros((0, self.dim), dtype=np.int64)
        cand = self.w_rows[blk].toarray()
        support = np.flatnonzero(cand.any(axis=0) | tvecs.any(axis=0))
        A = np.vstack([cand[:, support], (-tvecs[:, support]) % self.p]).T
        sol = nullspace_matrix(A, self.p)
        ycoef = sol[:, : blk.size]
        ycoef = echelon(ycoef[ycoef.any(axis=1)], self.p) if sol.shape[0] else ycoef
        out = np.zeros((ycoef.shape[0], self.dim), dtype=np.int64)
        out[:, blk] = ycoef
        return out

    @cached_property
    def torus_diagonals(self) -> np.ndarray:
        """Eigenvalue of each torus basis element on each realization coordinate."""
        diags = []
        for tc in self.torus:
            vec = self.vector(tc)
            A = sp.csr_matrix(self.space.ad(vec))
            off = A - sp.diags(A.diagonal())
            if canon(off, self.p).nnz:
                raise ValueError("torus does not act diagonally on the realization coordinates")
            diags.append(A.diagonal() % self.p)
        return np.array(diags, dtype=np.int64).reshape(len(diags), self.space.size)

    @property
    def weights(self) -> np.ndarray:
        """Encoded torus weight of each basis vector."""
        if self._weights is None:
            self._weights = self._compute_weights()
        return self._weights

    @cached_property
    def coord_weights(self) -> np.ndarray:
        D = self.torus_diagonals
        return _encode(D.T, self.p) if D.shape[0] else np.zeros(self.space.size, dtype=np.int64)

    def _compute_weights(self) -> np.ndarray:
        cw = self.coord_weights
        r = self.rows
        lead = cw[self.pivots]
        per_entry = cw[r.indices]
        lead_rep = np.repeat(lead, np.diff(r.indptr))
        if (per_entry != lead_rep).any():
            raise ValueError("basis vectors are not torus weight vectors; refine first")
        return lead

    def weight_vectors(self) -> np.ndarray:
        """Weights as residue tuples (dim x dim T)."""
        D = self.torus_diagonals
        return D[:, self.pivots].T.copy()

    # generators ---------------------------------------------------------------
    @cached_property
    def generators(self) -> np.ndarray:
        """Basis indices of a generating set: all of degree <= 1 plus echelon complements above.

        L_d is spanned by [L_1, L_{d-1}] and the added complement, so by induction
        the chosen elements generate every L_d.
        """
        gens = list(np.flatnonzero(self.deg <= 1))
        ones = np.flatnonzero(self.deg == 1)
        if not self.dim:
            return np.array(gens, dtype=np.int64)
        ads = [self.ad(int(i)) for i in ones]
        for d in range(2, int(self.deg.max()) + 1):
            idx = np.flatnonzero(self.deg == d)
            below = np.flatnonzero(self.deg == d - 1)
            if idx.size == 0:
                continue
            R = np.zeros((0, idx.size), dtype=np.int64)
            piv = np.zeros(0, dtype=np.int64)
            if below.size:
                # fold in one ad(L_1) image at a time; stop at full rank
                for A in ads:
                    block = A[idx][:, below].T.toarray()
                    if block.any():
                        R, piv = rref(np.vstack([R, block]), self.p)
                    if piv.size == idx.size:
                        break
            gens.extend(int(idx[j]) for j in np.setdiff1d(np.arange(idx.size), piv))
        return np.array(sorted(gens), dtype=np.int64)

    # serialization --------------------------------------------------------------
    def structure_constants(self) -> list:
        """Sparse triplets (i, j, k, c) with [b_i, b_j] = sum_k c b_k, for i <= j."""
        out = []
        for i in range(self.dim):
            A = self.ad(i).tocsc()
            for j in range(i, self.dim):
                col = A[:, j]
                for k, c in zip(col.indices, col.data):
                    out.append((i, j, int(k), int(c)))
        return out

    def summary(self) -> dict:
        lo, hi = self.degree_range()
        return {
            "spec": self.spec.as_dict(),
            "label": self.spec.label(),
            "dim": self.dim,
            "zdeg_range": [lo, hi],
            "dims_by_degree": {str(k): v for k, v in self.dims_by_degree().items()},
            "parity_counts": self.parity_counts(),
            "torus_dim": int(self.torus.shape[0]),
            "warnings": list(self.spec.warnings),
        }

    def to_json_dict(self, structure: bool = True) -> dict:
        d = self.summary()
        d["realization"] = self.space.kind if self.space.kind == "W" else f"O[{self.space.family}]"
        d["basis"] = self.basis_text()
        if structure:
            d["structure_constants"] = [list(x) for x in self.structure_constants()]
        return d


# ---------------------------------------------------------------------------
# construction

def _make_space(spec: AlgebraSpec, kind: str) -> Space:
    fam = spec.family
    if kind == "W":
        return WSpace(spec.params, fam)
    bracket = {"H": "H", "K": "K", "HO": "HO", "SHO": "HO", "KO": "KO", "SKO": "KO"}[fam]
    return OSpace(spec.params, bracket, fam)


def _build_plain(spec: AlgebraSpec) -> AlgebraHandle:
    fam = spec.family
    if fam == "W":
        space = _make_space(spec, "W")
        return AlgebraHandle(spec, space, full_rows(space))
    if fam == "S":
        space = _make_space(spec, "W")
        div = space.ops.div_matrix()
        return AlgebraHandle(spec, space, kernel_rows(space, lambda a: div))
    if fam in ("H", "K", "HO", "KO"):
        space = _make_space(spec, "O")
        return AlgebraHandle(spec, space, full_rows(space))
    if fam == "SHO":
        space = _make_space(spec, "O")
        C = canon(space.ops.div_matrix() @ space.to_w, spec.p)
        return AlgebraHandle(spec, space, kernel_rows(space, lambda a: C))
    if fam == "SKO":
        space = _make_space(spec, "O")
        C = space.ops.div_lambda_matrix(spec.lam)
        return AlgebraHandle(spec, space, kernel_rows(space, lambda a: C))
    raise SpecError(f"no construction for {fam}")


def _bar_conditions(space: WSpace, family: str):
    ops = space.ops
    conds = {0: [], 1: []}
    if family in ("S", "SHO"):
        div = sp.lil_matrix(ops.div_matrix())
        div[0, :] = 0
        div = sp.csr_matrix(div)
        conds[0].append(div)
        conds[1].append(div)
    if family in ("H", "HO", "SHO"):
        for alpha, mat in ops.hbar_conditions("H" if family == "H" else "HO"):
            conds[alpha].append(mat)
    stacked = {a: canon(sp.vstack(conds[a]), space.p) for a in (0, 1)}
    return lambda a: stacked[a]


def _build_bar(spec: AlgebraSpec) -> AlgebraHandle:
    space = _make_space(spec, "W")
    return AlgebraHandle(spec, space, kernel_rows(space, _bar_conditions(space, spec.family)))


def derived(h: AlgebraHandle, spec: AlgebraSpec | None = None) -> AlgebraHandle:
    """[L, L], computed as the sum of [g, L] over a generating set g."""
    blocks = []
    B = h.basis_matrix
    for g in h.generators:
        prod = canon(h.ad_v(int(g)) @ B, h.p)
        blocks.append(sp.csr_matrix(prod.T))
    M = sp.vstack(blocks) if blocks else sp.csr_matrix((0, h.space.size), dtype=np.int64)
    rows = echelon_rows(h.space, M)
    if spec is None:
        nxt = {"plain": "derived1", "derived1": "derived2"}.get(h.spec.variant, "derived2")
        spec = h.spec.with_variant(nxt)
    return AlgebraHandle(spec, h.space, rows, parent=h)


def build(spec: AlgebraSpec) -> AlgebraHandle:
    for note in spec.warnings:
        warnings.warn(f"{spec.label()}: {note}", stacklevel=2)
    if spec.variant == "plain":
        return _build_plain(spec)
    if spec.variant == "bar":
        return _build_bar(spec)
    base = _build_plain(spec.with_variant("plain"))
    h1 = derived(base, spec.with_variant("derived1"))
    if spec.variant == "derived1":
        return h1
    return derived(h1, spec.with_variant("derived2"))


def canonical_torus(h: AlgebraHandle) -> list:
    """The torus of h as vector fields."""
    fields = []
    for tc in h.torus:
        wvec = h.space.to_w @ h.vector(tc) % h.p
        fields.append(_wvec_field(h.params, wvec))
    return fields


def _wvec_field(params, wvec) -> VectorField:
    from .superspace import monomial_table
    T = monomial_table(params)
    N = params.nvars
    terms = {}
    for w in np.flatnonzero(wvec):
        k, j = divmod(int(w), N)
        terms[(T.monos[k], j + 1)] = int(wvec[w])
    return VectorField(params, terms)


def refine_weights(h: AlgebraHandle) -> AlgebraHandle:
    """Split basis vectors into torus weight components and re-echelonize."""
    cw = h.coord_weights
    r = h.rows.tocoo()
    key = r.row.astype(np.int64) * (int(cw.max()) + 1) + cw[r.col]
    _, inv = np.unique(key, return_inverse=True)
    M = sp.csr_matrix((r.data, (inv.ravel(), r.col)), shape=(int(inv.max()) + 1, h.space.size))
    space = h.space
    # weight classes within blocks: extend the block ids by the coordinate weight
    old = space.__dict__.pop("block_id", None)
    space.__dict__.pop("blocks", None)
    bid = np.unique(np.stack([space.block_id if old is None else old, cw], axis=1), axis=0, return_inverse=True)[1].ravel()
    space.__dict__["block_id"] = bid
    space.__dict__.pop("blocks", None)
    rows = echelon_rows(space, M)
    return AlgebraHandle(h.spec, space, rows, parent=h.parent)


def weight_decompose(h: AlgebraHandle) -> np.ndarray:
    """Weight of each basis element as residue tuples; refines when needed."""
    try:
        h.weights
    except ValueError:
        raise
    return h.weight_vectors()


def xi(spec: AlgebraSpec) -> int:
    return sum(spec.p ** ti for ti in spec.t) - spec.m + spec.n


def index_maps(spec: AlgebraSpec) -> IndexMaps:
    return IndexMaps(spec.m, spec.n)
