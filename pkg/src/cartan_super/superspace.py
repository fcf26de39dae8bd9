"""The superalgebra O(m,n;t): divided powers in m even variables tensored with
the exterior algebra on n odd variables.

Variables are numbered 1..m (even) and m+1..m+n (odd).  A monomial is
``x^(alpha) x^u`` with ``alpha`` a multi-index bounded by p**t_i - 1 and ``u``
a strictly increasing tuple of odd indices.

Two layers live here.  ``Monomial``/``SuperPoly`` are small immutable values
with dict-based arithmetic, convenient for tests and one-off formulas.
``MonomialTable`` enumerates the whole basis in canonical order and exposes
numpy index maps for multiplication and differentiation, which is what the
sparse operator code is built on.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .field import FieldCtx

FAMILIES = ("W", "S", "H", "K", "HO", "SHO", "KO", "SKO")


def lucas_binom(a: int, b: int, p: int) -> int:
    """C(a, b) mod p from the base-p digits of a and b."""
    if a < 0 or b < 0:
        raise ValueError("arguments must be nonnegative")
    if b > a:
        return 0
    res = 1
    while a or b:
        ad, bd = a % p, b % p
        if bd > ad:
            return 0
        num = den = 1
        for k in range(bd):
            num = num * (ad - k) % p
            den = den * (k + 1) % p
        res = res * num * pow(den, p - 2, p) % p
        a //= p
        b //= p
    return res


@dataclass(frozen=True)
class SpaceParams:
    m: int
    n: int
    t: tuple
    p: int

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(int(x) for x in self.t))
        FieldCtx(self.p)
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.n < 2:
            raise ValueError("n must exceed 1")
        if len(self.t) != self.m:
            raise ValueError(f"t needs {self.m} entries, got {len(self.t)}")
        if any(x < 1 for x in self.t):
            raise ValueError("every t_i must be positive")

    @property
    def pi(self) -> tuple:
        return tuple(self.p ** ti - 1 for ti in self.t)

    @property
    def nvars(self) -> int:
        return self.m + self.n

    @property
    def dim(self) -> int:
        return 2 ** self.n * int(np.prod([self.p ** ti for ti in self.t]))

    def is_odd(self, i: int) -> bool:
        return i > self.m

    def check_index(self, i: int):
        if not 1 <= i <= self.m + self.n:
            raise ValueError(f"variable index {i} outside 1..{self.m + self.n}")


@dataclass(frozen=True)
class Monomial:
    alpha: tuple
    u: tuple = ()

    @property
    def parity(self) -> int:
        return len(self.u) % 2

    @property
    def degree(self) -> int:
        return sum(self.alpha) + len(self.u)

    def sort_key(self):
        return (self.degree, tuple(reversed(self.alpha)), self.u)

    def text(self) -> str:
        s = "x^(" + ",".join(str(a) for a in self.alpha) + ")"
        if self.u:
            s += "*" + "".join(f"x[{j}]" for j in self.u)
        return s

    def __str__(self):
        return self.text()

    def exps(self, m: int, n: int) -> tuple:
        odd = [0] * n
        for j in self.u:
            odd[j - m - 1] = 1
        return tuple(self.alpha) + tuple(odd)


def unit(m: int, i: int, k: int = 1) -> tuple:
    """The multi-index k * eps_i (1-based i)."""
    return tuple(k if j == i - 1 else 0 for j in range(m))


def shuffle_sign(u: tuple, v: tuple) -> int:
    """Sign of the permutation sorting the concatenation u + v (disjoint inputs)."""
    inv = 0
    for a in u:
        for b in v:
            if a > b:
                inv += 1
    return -1 if inv % 2 else 1


def mono_mul(x: Monomial, y: Monomial, params: SpaceParams):
    """Product x*y as (coefficient, Monomial), or None when it vanishes."""
    if set(x.u) & set(y.u):
        return None
    p = params.p
    coef = 1
    alpha = []
    for a, b, bound in zip(x.alpha, y.alpha, params.pi):
        if a + b > bound:
            return None
        coef = coef * lucas_binom(a + b, a, p) % p
        alpha.append(a + b)
    if coef == 0:
        return None
    coef = coef * shuffle_sign(x.u, y.u) % p
    return coef, Monomial(tuple(alpha), tuple(sorted(x.u + y.u)))


class SuperPoly:
    """Sparse GF(p)-combination of monomials."""

    __slots__ = ("params", "terms")

    def __init__(self, params: SpaceParams, terms=None):
        self.params = params
        p = params.p
        clean = {}
        for mono, c in (terms or {}).items():
            c = int(c) % p
            if c:
                clean[mono] = (clean.get(mono, 0) + c) % p
                if not clean[mono]:
                    del clean[mono]
        self.terms = clean

    @classmethod
    def one(cls, params):
        return cls(params, {Monomial((0,) * params.m): 1})

    @classmethod
    def monomial(cls, params, alpha=None, u=(), coef=1):
        alpha = tuple(alpha) if alpha is not None else (0,) * params.m
        if len(alpha) != params.m or any(a < 0 or a > b for a, b in zip(alpha, params.pi)):
            raise ValueError(f"exponent {alpha} outside A(m;t)")
        u = tuple(u)
        if list(u) != sorted(set(u)) or any(j <= params.m or j > params.nvars for j in u):
            raise ValueError(f"bad shuffle {u}")
        return cls(params, {Monomial(alpha, u): coef})

    @classmethod
    def var(cls, params, i: int):
        params.check_index(i)
        if i <= params.m:
            return cls.monomial(params, unit(params.m, i))
        return cls.monomial(params, u=(i,))

    def is_zero(self) -> bool:
        return not self.terms

    def parity(self):
        """Common parity of the terms, or None for inhomogeneous (and zero) polys."""
        pars = {mono.parity for mono in self.terms}
        return pars.pop() if len(pars) == 1 else None

    def homogeneous_parts(self):
        parts = {}
        for mono, c in self.terms.items():
            parts.setdefault(mono.parity, {})[mono] = c
        return {k: SuperPoly(self.params, v) for k, v in parts.items()}

    def __add__(self, other):
        terms = dict(self.terms)
        for mono, c in other.terms.items():
            terms[mono] = terms.get(mono, 0) + c
        return SuperPoly(self.params, terms)

    def __neg__(self):
        return SuperPoly(self.params, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: int):
        return SuperPoly(self.params, {k: v * c for k, v in self.terms.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __mul__(self, other):
        if isinstance(other, SuperPoly):
            return poly_mul(self, other)
        return self.scale(other)

    def __eq__(self, other):
        return isinstance(other, SuperPoly) and self.params == other.params and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: kv[0].sort_key())

    def text(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{mono.text()}" for mono, c in self.sorted_terms())

    def __repr__(self):
        return f"SuperPoly({self.text()})"


def poly_mul(f: SuperPoly, g: SuperPoly) -> SuperPoly:
    params = f.params
    out = {}
    for x, a in f.terms.items():
        for y, b in g.terms.items():
            r = mono_mul(x, y, params)
            if r is not None:
                c, mono = r
                out[mono] = out.get(mono, 0) + a * b * c
    return SuperPoly(params, out)


def partial_mono(i: int, mono: Monomial, m: int):
    """The left derivative of a single monomial: (sign, Monomial) or None."""
    if i <= m:
        if mono.alpha[i - 1] == 0:
            return None
        alpha = list(mono.alpha)
        alpha[i - 1] -= 1
        return 1, Monomial(tuple(alpha), mono.u)
    if i not in mono.u:
        return None
    pos = mono.u.index(i)
    return (-1 if pos % 2 else 1), Monomial(mono.alpha, mono.u[:pos] + mono.u[pos + 1:])


def partial(i: int, f: SuperPoly) -> SuperPoly:
    f.params.check_index(i)
    out = {}
    for mono, c in f.terms.items():
        r = partial_mono(i, mono, f.params.m)
        if r is not None:
            out[r[1]] = out.get(r[1], 0) + r[0] * c
    return SuperPoly(f.params, out)


# ---------------------------------------------------------------------------
# gradings and index maps

def zd_weights(family: str, m: int, n: int) -> tuple:
    """Principal-grading degree of each variable x_1..x_{m+n}."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family}")
    w = [1] * (m + n)
    if family == "K":
        w[m - 1] = 2
    elif family in ("KO", "SKO"):
        if n != m + 1:
            raise ValueError(f"{family} requires n = m+1")
        w[2 * m] = 2
    return tuple(w)


def zdeg(mono: Monomial, family: str) -> int:
    """Principal-grading degree of a monomial for the given family."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family}")
    m = len(mono.alpha)
    heavy = {"K": m, "KO": 2 * m + 1, "SKO": 2 * m + 1}.get(family)
    d = sum(a * (2 if i + 1 == heavy else 1) for i, a in enumerate(mono.alpha))
    return d + sum(2 if j == heavy else 1 for j in mono.u)


@dataclass(frozen=True)
class IndexMaps:
    """The involutions ' and ~ of the index set and the sign function sigma."""

    m: int
    n: int

    @property
    def r(self) -> int:
        return self.m // 2

    def prime(self, i: int) -> int:
        r = self.r
        if 1 <= i <= r:
            return i + r
        if r < i <= 2 * r:
            return i - r
        if 1 <= i <= self.m + self.n:
            return i
        raise ValueError(f"index {i} outside I")

    def sigma(self, i: int) -> int:
        return -1 if self.r < i <= 2 * self.r else 1

    def tilde(self, i: int) -> int:
        m = self.m
        if 1 <= i <= m:
            return i + m
        if m < i <= 2 * m:
            return i - m
        raise ValueError(f"tilde undefined for index {i}")


# ---------------------------------------------------------------------------
# the enumerated basis

@lru_cache(maxsize=None)
def _binom_table(p: int, bound: int) -> np.ndarray:
    """tab[a, b] = C(a+b, a) mod p for a, b <= bound."""
    tab = np.zeros((bound + 1, bound + 1), dtype=np.int64)
    for a in range(bound + 1):
        for b in range(bound + 1):
            tab[a, b] = lucas_binom(a + b, a, p)
    return tab


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    c = np.zeros_like(x)
    while x.any():
        c += x & 1
        x = x >> 1
    return c


class MonomialTable:
    """All monomials of O(m,n;t) in canonical order, with vectorized index maps.

    Index maps return pairs ``(target, coef)`` of int64 arrays over the basis;
    ``target == -1`` marks a vanishing image.
    """

    def __init__(self, params: SpaceParams):
        self.params = params
        m, n = params.m, params.n
        ranges = [range(b + 1) for b in params.pi]
        entries = []
        for alpha in itertools.product(*ranges):
            for mask in range(2 ** n):
                u = tuple(m + 1 + k for k in range(n) if mask >> k & 1)
                entries.append(Monomial(tuple(alpha), u))
        entries.sort(key=Monomial.sort_key)
        self.monos = entries
        self.size = len(entries)
        self.index = {mono: k for k, mono in enumerate(entries)}
        self.alpha = np.array([mono.alpha for mono in entries], dtype=np.int64).reshape(self.size, m)
        self.mask = np.array([sum(1 << (j - m - 1) for j in mono.u) for mono in entries], dtype=np.int64)
        self.parity = _popcount(self.mask) % 2
        self.radix = np.array([int(np.prod([b + 1 for b in params.pi[:i]])) for i in range(m)], dtype=np.int64)
        codes = (self.alpha @ self.radix) * (2 ** n) + self.mask
        self.code2idx = np.full(params.dim, -1, dtype=np.int64)
        self.code2idx[codes] = np.arange(self.size)
        self.bound = np.array(params.pi, dtype=np.int64)

    @cached_property
    def exps(self) -> np.ndarray:
        m, n = self.params.m, self.params.n
        odd = (self.mask[:, None] >> np.arange(n)[None, :]) & 1
        return np.hstack([self.alpha, odd])

    def zdeg(self, weights) -> np.ndarray:
        return self.exps @ np.asarray(weights, dtype=np.int64)

    def lookup(self, alpha: np.ndarray, mask: np.ndarray) -> np.ndarray:
        codes = (alpha @ self.radix) * (2 ** self.params.n) + mask
        return self.code2idx[codes]

    @lru_cache(maxsize=None)
    def deriv(self, i: int):
        """Index map of the left derivative d/dx_i."""
        m = self.params.m
        self.params.check_index(i)
        if i <= m:
            ok = self.alpha[:, i - 1] > 0
            alpha = self.alpha.copy()
            alpha[:, i - 1] -= 1
            alpha[~ok] = 0
            tgt = np.where(ok, self.lookup(alpha, self.mask), -1)
            return tgt, np.ones(self.size, dtype=np.int64)
        bit = 1 << (i - m - 1)
        ok = (self.mask & bit) != 0
        below = _popcount(self.mask & (bit - 1))
        newmask = np.where(ok, self.mask ^ bit, self.mask)
        tgt = np.where(ok, self.lookup(self.alpha, newmask), -1)
        coef = np.where(below % 2 == 1, -1, 1)
        return tgt, coef

    def mult(self, k: int):
        """Index map of left multiplication by the monomial with index k."""
        p = self.params.p
        a = self.alpha[k]
        amask = int(self.mask[k])
        alpha = self.alpha + a[None, :]
        ok = np.all(alpha <= self.bound[None, :], axis=1) & ((self.mask & amask) == 0)
        tab = _binom_table(p, int(self.bound.max()))
        coef = np.ones(self.size, dtype=np.int64)
        for i in range(self.params.m):
            coef = coef * tab[a[i], np.minimum(self.alpha[:, i], self.bound[i])] % p
        # sign of moving the odd factors of the multiplier past those of the target
        inv = np.zeros(self.size, dtype=np.int64)
        for j in range(self.params.n):
            if amask >> j:
                above = bin(amask >> (j + 1)).count("1")
                inv += ((self.mask >> j) & 1) * above
        coef = np.where(inv % 2 == 1, -coef, coef) % p
        ok &= coef != 0
        alpha[~ok] = 0
        tgt = np.where(ok, self.lookup(alpha, np.where(ok, self.mask | amask, 0)), -1)
        return tgt, np.where(ok, coef, 0)

    def poly_vector(self, f: SuperPoly) -> np.ndarray:
        v = np.zeros(self.size, dtype=np.int64)
        for mono, c in f.terms.items():
            v[self.index[mono]] = c
        return v

    def vector_poly(self, v) -> SuperPoly:
        nz = np.flatnonzero(v)
        return SuperPoly(self.params, {self.monos[k]: int(v[k]) for k in nz})


@lru_cache(maxsize=32)
def monomial_table(params: SpaceParams) -> MonomialTable:
    return MonomialTable(params)
