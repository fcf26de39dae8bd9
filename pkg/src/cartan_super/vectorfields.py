"""Vector fields on O(m,n;t) (the Lie superalgebra W) and the operators used to
cut out the other families: divergence, D_ij, the Hamiltonian and contact
maps D_H, D_K, T_H, D_KO, the twisted divergence div_lambda, the two degree
derivations, and the realized brackets on O.
"""

from __future__ import annotations

from dataclasses import dataclass

from .superspace import (
    IndexMaps, Monomial, SpaceParams, SuperPoly, partial, partial_mono, poly_mul, unit, zd_weights,
)


class VectorField:
    """Sparse combination of f*d_i, stored as {(Monomial, i): coefficient}."""

    __slots__ = ("params", "terms")

    def __init__(self, params: SpaceParams, terms=None):
        self.params = params
        p = params.p
        clean = {}
        for key, c in (terms or {}).items():
            c = (clean.get(key, 0) + int(c)) % p
            if c:
                clean[key] = c
            else:
                clean.pop(key, None)
        self.terms = clean

    @classmethod
    def zero(cls, params):
        return cls(params)

    @classmethod
    def from_poly(cls, f: SuperPoly, i: int):
        """The field f*d_i."""
        f.params.check_index(i)
        return cls(f.params, {(mono, i): c for mono, c in f.terms.items()})

    @classmethod
    def d(cls, params, i: int):
        return cls.from_poly(SuperPoly.one(params), i)

    def coefficient(self, i: int) -> SuperPoly:
        return SuperPoly(self.params, {mono: c for (mono, j), c in self.terms.items() if j == i})

    def is_zero(self) -> bool:
        return not self.terms

    def parity(self):
        pars = {(mono.parity + (j > self.params.m)) % 2 for mono, j in self.terms}
        return pars.pop() if len(pars) == 1 else None

    def zdeg(self, family: str = "W"):
        w = zd_weights(family, self.params.m, self.params.n)
        degs = {sum(a * w[k] for k, a in enumerate(mono.alpha)) + sum(w[j - 1] for j in mono.u) - w[i - 1]
                for mono, i in self.terms}
        return degs.pop() if len(degs) == 1 else None

    def homogeneous_terms(self):
        """Yield single-term fields (monomial, i, coef)."""
        for (mono, i), c in self.terms.items():
            yield mono, i, c

    def __add__(self, other):
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0) + c
        return VectorField(self.params, terms)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: int):
        return VectorField(self.params, {k: v * c for k, v in self.terms.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.params == other.params and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0].sort_key(), kv[0][1]))

    def text(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{mono.text()}*d/dx[{i}]" for (mono, i), c in self.sorted_terms())

    def __repr__(self):
        return f"VectorField({self.text()})"


def _mono_poly(params, mono, c=1):
    return SuperPoly(params, {mono: c})


def _pm(e: int) -> int:
    return -1 if e % 2 else 1


def apply(D: VectorField, f: SuperPoly) -> SuperPoly:
    """The action of D on O: sum of f_i * d_i(f)."""
    params = D.params
    out = SuperPoly(params)
    for (mono, i), c in D.terms.items():
        g = partial(i, f)
        if not g.is_zero():
            out = out + poly_mul(_mono_poly(params, mono, c), g)
    return out


def bracket(D: VectorField, E: VectorField) -> VectorField:
    """Supercommutator of two fields, expanded with the first-order formula."""
    params = D.params
    m = params.m
    out = {}
    for (f, i), a in D.terms.items():
        pf = (f.parity + (i > m)) % 2
        for (g, j), b in E.terms.items():
            pg = (g.parity + (j > m)) % 2
            r = partial_mono(i, g, m)
            if r is not None:
                for mono, c in poly_mul(_mono_poly(params, f), _mono_poly(params, r[1])).terms.items():
                    out[(mono, j)] = out.get((mono, j), 0) + a * b * r[0] * c
            r = partial_mono(j, f, m)
            if r is not None:
                s = -_pm(pf * pg)
                for mono, c in poly_mul(_mono_poly(params, g), _mono_poly(params, r[1])).terms.items():
                    out[(mono, i)] = out.get((mono, i), 0) + s * a * b * r[0] * c
    return VectorField(params, out)


def divergence(D: VectorField) -> SuperPoly:
    params = D.params
    out = SuperPoly(params)
    for (mono, k), c in D.terms.items():
        s = _pm((k > params.m) * mono.parity)
        out = out + partial(k, _mono_poly(params, mono, c * s))
    return out


def _by_monomial(a: SuperPoly):
    for mono, c in a.terms.items():
        yield mono, _mono_poly(a.params, mono, c)


def op_DIJ(i: int, j: int, a: SuperPoly) -> VectorField:
    params = a.params
    m = params.m
    pi, pj = int(i > m), int(j > m)
    out = VectorField(params)
    for mono, f in _by_monomial(a):
        first = VectorField.from_poly(partial(i, f), j).scale(_pm(pi * pj))
        second = VectorField.from_poly(partial(j, f), i).scale(_pm((pi + pj) * mono.parity))
        out = out + first - second
    return out


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def op_DH(a: SuperPoly) -> VectorField:
    params = a.params
    _require(params.m % 2 == 0, "H requires even m")
    ix = IndexMaps(params.m, params.n)
    out = VectorField(params)
    for mono, f in _by_monomial(a):
        for i in range(1, params.nvars + 1):
            s = ix.sigma(i) * _pm((i > params.m) * mono.parity)
            out = out + VectorField.from_poly(partial(i, f), ix.prime(i)).scale(s)
    return out


def op_DK(a: SuperPoly) -> VectorField:
    params = a.params
    m = params.m
    _require(m % 2 == 1, "K requires odd m")
    ix = IndexMaps(m, params.n)
    out = VectorField(params)
    for mono, f in _by_monomial(a):
        dm = partial(m, f)
        last = f.scale(2)
        for i in range(1, params.nvars + 1):
            if i == m:
                continue
            xi = SuperPoly.var(params, i)
            ip = ix.prime(i)
            coef = poly_mul(xi, dm) + partial(ip, f).scale(ix.sigma(ip))
            out = out + VectorField.from_poly(coef, i).scale(_pm((i > m) * mono.parity))
            last = last - poly_mul(xi, partial(i, f))
        out = out + VectorField.from_poly(last, m)
    return out


def _check_ho(params):
    _require(params.n == params.m, "HO and SHO require n = m")


def _check_ko(params):
    _require(params.n == params.m + 1, "KO and SKO require n = m+1")


def op_TH(a: SuperPoly) -> VectorField:
    """T_H; on O(m,m+1) the sum runs over the first 2m indices only."""
    params = a.params
    m = params.m
    _require(params.n in (m, m + 1), "T_H requires n = m or n = m+1")
    ix = IndexMaps(m, params.n)
    out = VectorField(params)
    for mono, f in _by_monomial(a):
        for i in range(1, 2 * m + 1):
            s = _pm((i > m) * mono.parity)
            out = out + VectorField.from_poly(partial(i, f), ix.tilde(i)).scale(s)
    return out


def degree_2m(params: SpaceParams) -> VectorField:
    """sum_{i<=2m} x_i d_i."""
    return VectorField(params, {_var_mono(params, i) + (i,): 1 for i in range(1, min(2 * params.m, params.nvars) + 1)})


def degree_full(params: SpaceParams) -> VectorField:
    """sum_{i in I} x_i d_i, the degree derivation of the standard grading."""
    return VectorField(params, {_var_mono(params, i) + (i,): 1 for i in range(1, params.nvars + 1)})


def _var_mono(params, i):
    if i <= params.m:
        return (Monomial(unit(params.m, i)),)
    return (Monomial((0,) * params.m, (i,)),)


def op_DKO(a: SuperPoly) -> VectorField:
    params = a.params
    m = params.m
    _check_ko(params)
    last = 2 * m + 1
    deg = degree_2m(params)
    out = op_TH(a)
    for mono, f in _by_monomial(a):
        d = partial(last, f).scale(_pm(mono.parity))
        for i in range(1, 2 * m + 1):
            out = out + VectorField.from_poly(poly_mul(d, SuperPoly.var(params, i)), i)
        out = out + VectorField.from_poly(apply(deg, f) - f.scale(2), last)
    return out


def div_lambda(a: SuperPoly, lam: int) -> SuperPoly:
    params = a.params
    m = params.m
    _check_ko(params)
    ix = IndexMaps(m, params.n)
    deg = degree_2m(params)
    out = SuperPoly(params)
    for mono, f in _by_monomial(a):
        s = SuperPoly(params)
        for i in range(1, m + 1):
            s = s + partial(i, partial(ix.tilde(i), f))
        g = partial(2 * m + 1, f)
        s = s + apply(deg, g) - g.scale(m * lam)
        out = out + s.scale(2 * _pm(mono.parity))
    return out


def bracket_O(family: str, a: SuperPoly, b: SuperPoly, lam=None) -> SuperPoly:
    """The bracket transported to O (or its quotient by constants for H, HO)."""
    params = a.params
    if family == "H":
        return apply(op_DH(a), b)
    if family == "K":
        return apply(op_DK(a), b) - poly_mul(partial(params.m, a), b).scale(2)
    if family == "HO":
        _check_ho(params)
        return apply(op_TH(a), b)
    if family == "KO":
        out = apply(op_DKO(a), b)
        for mono, f in _by_monomial(a):
            out = out - poly_mul(partial(2 * params.m + 1, f), b).scale(2 * _pm(mono.parity))
        return out
    raise ValueError(f"no realized bracket for family {family}")


def insert_var(i: int, D: VectorField) -> VectorField:
    """Raise the x_i-exponent of every term by one, dropping truncated terms."""
    params = D.params
    m = params.m
    out = {}
    for (mono, j), c in D.terms.items():
        if i <= m:
            alpha = list(mono.alpha)
            alpha[i - 1] += 1
            if alpha[i - 1] > params.pi[i - 1]:
                continue
            out[(Monomial(tuple(alpha), mono.u), j)] = c
        else:
            if i in mono.u:
                continue
            pos = sum(1 for k in mono.u if k < i)
            out[(Monomial(mono.alpha, tuple(sorted(mono.u + (i,)))), j)] = c * _pm(pos)
    return VectorField(params, out)


def is_integral(i: int, D: VectorField) -> bool:
    D.params.check_index(i)
    lifted = insert_var(i, D)
    return bracket(VectorField.d(D.params, i), lifted) == D


@dataclass(frozen=True)
class OperatorTag:
    """Names one of the structural operators, with its arguments."""

    which: str
    args: tuple = ()

    KINDS = ("DIV", "DIJ", "DH", "DK", "TH", "DKO", "DIVLAMBDA", "DEGREE_FULL", "DEGREE_2M")

    def __post_init__(self):
        if self.which not in self.KINDS:
            raise ValueError(f"unknown operator {self.which}")

    def check(self, params: SpaceParams):
        m, n = params.m, params.n
        if self.which == "DH":
            _require(m % 2 == 0, "D_H requires even m")
        elif self.which == "DK":
            _require(m % 2 == 1, "D_K requires odd m")
        elif self.which == "TH":
            _require(n in (m, m + 1), "T_H requires n = m or n = m+1")
        elif self.which in ("DKO", "DIVLAMBDA"):
            _check_ko(params)

    def __call__(self, x):
        params = x.params
        self.check(params)
        w = self.which
        if w == "DIV":
            return divergence(x)
        if w == "DIJ":
            return op_DIJ(self.args[0], self.args[1], x)
        if w == "DH":
            return op_DH(x)
        if w == "DK":
            return op_DK(x)
        if w == "TH":
            return op_TH(x)
        if w == "DKO":
            return op_DKO(x)
        if w == "DIVLAMBDA":
            return div_lambda(x, self.args[0])
        if w == "DEGREE_FULL":
            return degree_full(params)
        return degree_2m(params)
