"""Sparse matrices for the operators of ``vectorfields``.

Everything here works on coordinate vectors.  O is indexed by the canonical
monomial order of ``MonomialTable``; W by ``mono * N + (i - 1)`` with N = m+n,
so a W coordinate is the field ``x^(alpha)x^u d_i``.

Maps are built from index maps ``(target, coef)`` over the monomial basis,
composed with numpy and assembled into scipy CSR matrices at the end.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .field import canon
from .superspace import IndexMaps, SpaceParams, monomial_table, unit, Monomial


class IndexMap:
    """A monomial-to-monomial map with coefficients; target -1 means zero."""

    __slots__ = ("tgt", "coef")

    def __init__(self, tgt, coef):
        self.tgt = tgt
        self.coef = coef

    @classmethod
    def identity(cls, size, c=1):
        return cls(np.arange(size), np.full(size, c, dtype=np.int64))

    def then(self, other: "IndexMap") -> "IndexMap":
        """other after self."""
        ok = self.tgt >= 0
        safe = np.where(ok, self.tgt, 0)
        tgt = np.where(ok, other.tgt[safe], -1)
        coef = np.where(tgt >= 0, self.coef * other.coef[safe], 0)
        return IndexMap(tgt, coef)

    def signed(self, s) -> "IndexMap":
        return IndexMap(self.tgt, self.coef * s)


class SpaceOps:
    """Operator matrices on O(m,n;t) and W(m,n;t) for fixed parameters."""

    def __init__(self, params: SpaceParams):
        self.params = params
        self.table = monomial_table(params)
        self.size = self.table.size
        self.N = params.nvars
        self.p = params.p
        self.ix = IndexMaps(params.m, params.n)
        par = self.table.parity
        self.par = par
        self.sign_par = np.where(par == 1, -1, 1)
        # W coordinates
        self.wmono = np.repeat(np.arange(self.size), self.N)
        self.wdir = np.tile(np.arange(1, self.N + 1), self.size)
        self.wpar = (par[self.wmono] + (self.wdir > params.m)) % 2

    # elementary maps -----------------------------------------------------
    def is_odd(self, i):
        return int(i > self.params.m)

    def var_index(self, i: int) -> int:
        m = self.params.m
        if i <= m:
            return self.table.index[Monomial(unit(m, i))]
        return self.table.index[Monomial((0,) * m, (i,))]

    @lru_cache(maxsize=None)
    def deriv(self, i: int) -> IndexMap:
        return IndexMap(*self.table.deriv(i))

    @lru_cache(maxsize=8192)
    def mult(self, k: int) -> IndexMap:
        return IndexMap(*self.table.mult(k))

    def parsign(self, e: int):
        """(-1)^(e*|a|) over the monomial basis."""
        return self.sign_par if e % 2 else 1

    # assembly ------------------------------------------------------------
    def o_matrix(self, maps) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for imap in maps:
            ok = imap.tgt >= 0
            rows.append(imap.tgt[ok])
            cols.append(np.flatnonzero(ok))
            vals.append(imap.coef[ok])
        return self._coo(rows, cols, vals, (self.size, self.size))

    def _coo(self, rows, cols, vals, shape):
        if rows:
            r, c, v = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
        else:
            r = c = v = np.zeros(0, dtype=np.int64)
        return canon(sp.csr_matrix((v % self.p, (r, c)), shape=shape), self.p)

    def o_to_w(self, dir_maps) -> sp.csr_matrix:
        """Assemble O -> W from {direction: [IndexMap, ...]}."""
        rows, cols, vals = [], [], []
        for j, maps in dir_maps.items():
            for imap in maps:
                ok = imap.tgt >= 0
                rows.append(imap.tgt[ok] * self.N + (j - 1))
                cols.append(np.flatnonzero(ok))
                vals.append(imap.coef[ok])
        return self._coo(rows, cols, vals, (self.size * self.N, self.size))

    def w_to_o(self, dir_maps) -> sp.csr_matrix:
        """Assemble W -> O from {direction k: [IndexMap acting on the coefficient of d_k]}."""
        rows, cols, vals = [], [], []
        for k, maps in dir_maps.items():
            for imap in maps:
                ok = imap.tgt >= 0
                rows.append(imap.tgt[ok])
                cols.append(np.flatnonzero(ok) * self.N + (k - 1))
                vals.append(imap.coef[ok])
        return self._coo(rows, cols, vals, (self.size, self.size * self.N))

    # operators on O --------------------------------------------------------
    def deriv_matrix(self, i: int):
        return self.o_matrix([self.deriv(i)])

    def mult_matrix(self, vec) -> sp.csr_matrix:
        """Left multiplication by the polynomial with coordinates ``vec``."""
        maps = [self.mult(int(k)).signed(int(vec[k])) for k in np.flatnonzero(vec)]
        return self.o_matrix(maps)

    def field_maps(self, wvec):
        """Index maps whose sum is the action on O of the field with W-coordinates ``wvec``."""
        maps = []
        for w in np.flatnonzero(wvec):
            k, j = divmod(int(w), self.N)
            maps.append(self.deriv(j + 1).then(self.mult(k)).signed(int(wvec[w])))
        return maps

    def field_matrix(self, wvec) -> sp.csr_matrix:
        return self.o_matrix(self.field_maps(wvec))

    # operators on W --------------------------------------------------------
    def ad_w(self, wvec) -> sp.csr_matrix:
        """ad of a field on W coordinates, via the first-order bracket formula."""
        rows, cols, vals = [], [], []
        N, size = self.N, self.size
        for w in np.flatnonzero(wvec):
            c = int(wvec[w])
            k, i0 = divmod(int(w), N)
            i = i0 + 1
            pf = (int(self.par[k]) + self.is_odd(i)) % 2
            # f d_i(h) d_j
            first = self.deriv(i).then(self.mult(k))
            ok = first.tgt >= 0
            for j in range(1, N + 1):
                rows.append(first.tgt[ok] * N + (j - 1))
                cols.append(np.flatnonzero(ok) * N + (j - 1))
                vals.append(first.coef[ok] * c)
            # - (-1)^{|f d_i||h d_j|} h d_j(f) d_i, written as a left product by d_j(f)
            f_idx = k
            for j in range(1, N + 1):
                tg, sg = self.table.deriv(j)
                g = int(tg[f_idx])
                if g < 0:
                    continue
                gpar = int(self.par[g])
                mul = self.mult(g)
                ok = mul.tgt >= 0
                hpar = self.par
                e = pf * ((hpar + self.is_odd(j)) % 2) + hpar * gpar
                s = np.where(e % 2 == 1, 1, -1) * int(sg[f_idx]) * c
                rows.append(mul.tgt[ok] * N + i0)
                cols.append(np.flatnonzero(ok) * N + (j - 1))
                vals.append((mul.coef * s)[ok])
        return self._coo(rows, cols, vals, (size * N, size * N))

    def div_matrix(self) -> sp.csr_matrix:
        return self.w_to_o({k: [self.deriv(k).signed(self.parsign(self.is_odd(k)))]
                            for k in range(1, self.N + 1)})

    def ppower_w(self, i: int, j: int) -> sp.csr_matrix:
        """ad of d_i^(p^j) on W: lowers the exponent of x_i by p^j in every coefficient."""
        t = self.table
        step = self.p ** j
        ok = t.alpha[:, i - 1] >= step
        alpha = t.alpha.copy()
        alpha[:, i - 1] -= step
        alpha[~ok] = 0
        tgt = np.where(ok, t.lookup(alpha, t.mask), -1)
        imap = IndexMap(tgt, np.ones(self.size, dtype=np.int64))
        return self.w_to_o_same(imap)

    def ppower_o(self, i: int, j: int) -> sp.csr_matrix:
        t = self.table
        step = self.p ** j
        ok = t.alpha[:, i - 1] >= step
        alpha = t.alpha.copy()
        alpha[:, i - 1] -= step
        alpha[~ok] = 0
        tgt = np.where(ok, t.lookup(alpha, t.mask), -1)
        return self.o_matrix([IndexMap(tgt, np.ones(self.size, dtype=np.int64))])

    def w_to_o_same(self, imap: IndexMap) -> sp.csr_matrix:
        """Apply an O-map to every coefficient of a field, keeping directions."""
        rows, cols, vals = [], [], []
        ok = imap.tgt >= 0
        for j in range(1, self.N + 1):
            rows.append(imap.tgt[ok] * self.N + (j - 1))
            cols.append(np.flatnonzero(ok) * self.N + (j - 1))
            vals.append(imap.coef[ok])
        return self._coo(rows, cols, vals, (self.size * self.N, self.size * self.N))

    # the realization maps O -> W ---------------------------------------------
    def dh_maps(self):
        ix = self.ix
        out = {}
        for i in range(1, self.N + 1):
            m = self.deriv(i).signed(ix.sigma(i) * self.parsign(self.is_odd(i)))
            out.setdefault(ix.prime(i), []).append(m)
        return out

    def dk_maps(self):
        ix, mm = self.ix, self.params.m
        size = self.size
        out = {}
        last = [IndexMap.identity(size, 2)]
        for i in range(1, self.N + 1):
            if i == mm:
                continue
            s = self.parsign(self.is_odd(i))
            xi = self.mult(self.var_index(i))
            ip = ix.prime(i)
            out[i] = [self.deriv(mm).then(xi).signed(s), self.deriv(ip).signed(ix.sigma(ip) * s)]
            last.append(self.deriv(i).then(xi).signed(-1))
        out[mm] = last
        return out

    def th_maps(self):
        m = self.params.m
        out = {}
        for i in range(1, 2 * m + 1):
            out.setdefault(self.ix.tilde(i), []).append(self.deriv(i).signed(self.parsign(self.is_odd(i))))
        return out

    def dko_maps(self):
        m = self.params.m
        last = 2 * m + 1
        out = self.th_maps()
        d = self.deriv(last)
        # (-1)^{|a|} d_last(a) x_i, written with left multiplication by x_i
        for i in range(1, 2 * m + 1):
            xi = self.mult(self.var_index(i))
            s = -1 if self.is_odd(i) else self.sign_par
            out.setdefault(i, []).append(d.then(xi).signed(s))
        deg = [self.deriv(i).then(self.mult(self.var_index(i))) for i in range(1, 2 * m + 1)]
        out.setdefault(last, []).extend(deg + [IndexMap.identity(self.size, -2)])
        return out

    def realization_maps(self, family: str):
        if family == "H":
            return self.dh_maps()
        if family == "K":
            return self.dk_maps()
        if family in ("HO", "SHO"):
            return self.th_maps()
        if family in ("KO", "SKO"):
            return self.dko_maps()
        raise ValueError(f"family {family} has no O-realization")

    @lru_cache(maxsize=None)
    def embedding(self, family: str) -> sp.csr_matrix:
        """The map a -> D_X(a) as an O -> W matrix."""
        return self.o_to_w(self.realization_maps(family))

    def correction_maps(self, family: str, ovec):
        """Extra terms of the realized bracket beyond D_X(a)(b)."""
        maps = []
        if family == "K":
            tg, sg = self.table.deriv(self.params.m)
            for k in np.flatnonzero(ovec):
                if tg[k] >= 0:
                    maps.append(self.mult(int(tg[k])).signed(-2 * int(sg[k]) * int(ovec[k])))
        elif family in ("KO", "SKO"):
            tg, sg = self.table.deriv(2 * self.params.m + 1)
            for k in np.flatnonzero(ovec):
                if tg[k] >= 0:
                    s = -2 * (-1 if self.par[k] else 1) * int(sg[k]) * int(ovec[k])
                    maps.append(self.mult(int(tg[k])).signed(s))
        return maps

    def ad_o(self, family: str, ovec) -> sp.csr_matrix:
        """ad of ``ovec`` for the realized bracket of ``family`` on O coordinates."""
        E = self.embedding(family)
        wvec = (E @ np.asarray(ovec, dtype=np.int64)) % self.p
        return self.o_matrix(self.field_maps(wvec) + self.correction_maps(family, ovec))

    def div_lambda_matrix(self, lam: int) -> sp.csr_matrix:
        m = self.params.m
        last = 2 * m + 1
        maps = []
        s2 = 2 * self.sign_par
        for i in range(1, m + 1):
            maps.append(self.deriv(self.ix.tilde(i)).then(self.deriv(i)).signed(s2))
        d = self.deriv(last)
        for i in range(1, 2 * m + 1):
            maps.append(d.then(self.deriv(i)).then(self.mult(self.var_index(i))).signed(s2))
        maps.append(d.signed(-m * lam * s2))
        return self.o_matrix(maps)

    def hbar_conditions(self, family: str) -> list:
        """Rows (as W -> O matrices) of the defining conditions of the bar algebras.

        For H: d_i(a_{j'}) - s * sigma(i)sigma(j) d_j(a_{i'}); for HO with j~, i~.
        The sign depends on the parity of the field, so two matrices per pair
        are returned with a mask selecting the W coordinates of that parity.
        """
        ix = self.ix
        out = []
        N = self.N
        for i in range(1, N + 1):
            for j in range(i, N + 1):
                for alpha in (0, 1):
                    pi, pj = self.is_odd(i), self.is_odd(j)
                    if family == "H":
                        ja, ia = ix.prime(j), ix.prime(i)
                        s = (-1) ** (pi * pj + (pi + pj) * alpha) * ix.sigma(i) * ix.sigma(j)
                    else:
                        if i > 2 * self.params.m or j > 2 * self.params.m:
                            continue
                        ja, ia = ix.tilde(j), ix.tilde(i)
                        s = (-1) ** (pi * pj + (pi + pj) * (alpha + 1))
                    mat = self.w_to_o({ja: [self.deriv(i)]}) - self.w_to_o({ia: [self.deriv(j).signed(s)]})
                    out.append((alpha, canon(mat, self.p)))
        return out


@lru_cache(maxsize=16)
def space_ops(params: SpaceParams) -> SpaceOps:
    return SpaceOps(params)
