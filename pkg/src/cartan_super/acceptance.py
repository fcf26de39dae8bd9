"""Grid files and the acceptance checks shared by the CLI and the test suite."""

from __future__ import annotations

import shlex
import time
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import dersolve as ds
from .families import AlgebraSpec, SpecError, build, derived, xi
from .field import rref
from .operators import space_ops
from .structure import (Subspace, check_jacobi, height_depth, is_simple, normalizer,
                        w_subspace)
from .superspace import Monomial, unit


# ---------------------------------------------------------------------------
# grid files

@dataclass(frozen=True)
class GridRow:
    spec: AlgebraSpec
    asserted: bool = True
    slow: bool = False
    line: int = 0


_KEYS = {"family", "m", "n", "p", "t", "lambda", "variant", "assert", "slow"}


def parse_row(text: str, line: int = 0) -> GridRow:
    kv = {}
    for tok in shlex.split(text):
        if "=" not in tok:
            raise SpecError(f"line {line}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        if k not in _KEYS:
            raise SpecError(f"line {line}: unknown key {k!r}")
        kv[k] = v
    for req in ("family", "m", "p", "t"):
        if req not in kv:
            raise SpecError(f"line {line}: missing {req}")
    try:
        spec = AlgebraSpec(
            family=kv["family"], m=int(kv["m"]), p=int(kv["p"]),
            t=tuple(int(x) for x in kv["t"].split(",")),
            n=int(kv["n"]) if "n" in kv else None,
            variant=kv.get("variant", "plain"),
            lam=int(kv["lambda"]) if "lambda" in kv else None,
        )
    except ValueError as exc:
        raise SpecError(f"line {line}: {exc}") from None
    yes = ("yes", "true", "1")
    return GridRow(spec, kv.get("assert", "yes") in yes, kv.get("slow", "no") in yes, line)


def load_grid(path=None) -> list:
    if path is None:
        text = resources.files("cartan_super").joinpath("data/default.grid").read_text()
    else:
        text = Path(path).read_text()
    rows = []
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if s:
            rows.append(parse_row(s, i))
    return rows


def spec_fields(spec: AlgebraSpec) -> dict:
    return {"family": spec.family, "variant": spec.variant, "m": spec.m, "n": spec.n, "p": spec.p,
            "t": ",".join(map(str, spec.t)), "lambda": "" if spec.lam is None else spec.lam}


# ---------------------------------------------------------------------------
# cached handles and reports

class Context:
    """Builds each algebra, derivation report and normalizer once."""

    def __init__(self):
        self._h, self._der, self._nor = {}, {}, {}

    def handle(self, spec: AlgebraSpec):
        h = self._h.get(spec)
        if h is None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                if spec.variant in ("plain", "bar"):
                    h = build(spec)
                else:
                    prev = "plain" if spec.variant == "derived1" else "derived1"
                    h = derived(self.handle(spec.with_variant(prev)), spec)
            self._h[spec] = h
        return h

    def der(self, spec: AlgebraSpec, mode: str = "weight_reduced") -> ds.DerivationReport:
        key = (spec, mode)
        if key not in self._der:
            self._der[key] = ds.der_full(self.handle(spec), mode=mode, spec=spec)
        return self._der[key]

    def nor(self, spec: AlgebraSpec) -> Subspace:
        if spec not in self._nor:
            self._nor[spec] = normalizer(self.handle(spec))
        return self._nor[spec]

    def release(self, spec: AlgebraSpec):
        """Free cached ad matrices (keeps the reports)."""
        for key, h in self._h.items():
            if key.family == spec.family and key.m == spec.m and key.t == spec.t and key.lam == spec.lam:
                h.drop_cache()


# ---------------------------------------------------------------------------
# tables

def euler_field(params) -> np.ndarray:
    """sum over all variables of x_i d_i, as W coordinates."""
    ops = space_ops(params)
    v = np.zeros(ops.size * ops.N, dtype=np.int64)
    for i in range(1, ops.N + 1):
        v[ops.var_index(i) * ops.N + i - 1] = 1
    return v


def odd_contact_extra(params) -> np.ndarray:
    """The W coordinates of the odd contact field of x_1 x_{m+1}."""
    ops = space_ops(params)
    m = params.m
    k = ops.table.index[Monomial(unit(m, 1), (m + 1,))]
    E = sp.csc_matrix(ops.embedding("KO"))
    return E[:, k].toarray().ravel() % params.p


def expected_normalizer(ctx: Context, spec: AlgebraSpec) -> Subspace:
    """The subspace of W listed for the normalizer of a plain algebra."""
    fam = spec.family
    if fam in ("S", "H", "HO", "SHO"):
        base = w_subspace(ctx.handle(spec.with_variant("bar")))
    else:
        base = w_subspace(ctx.handle(spec))
    if fam in ("H", "HO", "SHO"):
        return base.plus(euler_field(spec.params)[None, :])
    if fam == "SKO":
        return base.plus(odd_contact_extra(spec.params)[None, :])
    return base


def outer_variants(spec: AlgebraSpec) -> list:
    out = []
    for v in ("plain", "derived1", "derived2"):
        s = spec.with_variant(v)
        try:
            ds.expected_outer_dim(s)
        except ds.NotSpecified:
            continue
        out.append(s)
    return out


def table_rows(which: str, row: GridRow, ctx: Context | None = None) -> list:
    """CSV records (dicts) for one grid row."""
    ctx = ctx or Context()
    spec = row.spec.with_variant("plain")
    recs = []
    if which == "heights":
        s2 = spec.with_variant("derived2")
        _, height = height_depth(ctx.handle(s2))
        exp = ds.expected_height(spec)
        recs.append(dict(spec_fields(s2), computed=height, expected=exp, match=height == exp))
    elif which == "outer-dims":
        for s in outer_variants(spec):
            rep = ctx.der(s)
            recs.append(dict(spec_fields(s), computed=rep.outer, expected=rep.expected_outer,
                             match=rep.outer == rep.expected_outer))
    elif which == "normalizers":
        if spec.family != "W":
            nor = ctx.nor(spec)
            exp = expected_normalizer(ctx, spec)
            recs.append(dict(spec_fields(spec), computed=nor.dim, expected=exp.dim, match=nor == exp))
    else:
        raise ValueError(f"unknown table {which}")
    for r in recs:
        r["asserted"] = row.asserted
    ctx.release(spec)
    return recs


# ---------------------------------------------------------------------------
# acceptance checks

@dataclass
class CheckResult:
    name: str
    ok: bool
    lines: list = field(default_factory=list)
    seconds: float = 0.0

    def summary(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name} ({self.seconds:.1f}s)"


class Suite:
    """The ten acceptance groups over a grid."""

    NAMES = ("jacobi", "heights", "outer-dims", "exceptional", "normalizers",
             "decompositions", "simplicity", "solver", "restricted", "abelian")

    def __init__(self, rows: list, include_slow: bool = False, ctx: Context | None = None):
        self.rows = [r for r in rows if include_slow or not r.slow]
        self.ctx = ctx or Context()

    def run(self, only=None):
        """Yield one result per group, as each finishes."""
        names = self.NAMES if not only else [n for n in self.NAMES if n in only]
        unknown = set(only or ()) - set(self.NAMES)
        if unknown:
            raise ValueError(f"unknown check group(s): {', '.join(sorted(unknown))}")
        for n in names:
            yield self.run_one(n)

    def run_one(self, name: str) -> CheckResult:
        t0 = time.perf_counter()
        res = CheckResult(name, True)
        try:
            getattr(self, "check_" + name.replace("-", "_"))(res)
        except Exception as exc:  # a crash fails the group and names it
            res.ok = False
            res.lines.append(f"error: {type(exc).__name__}: {exc}")
        res.seconds = time.perf_counter() - t0
        return res

    def _note(self, res, row, ok, text):
        tag = "ok" if ok else ("MISMATCH" if row.asserted else "reported")
        res.lines.append(f"{tag}: {text}")
        if row.asserted and not ok:
            res.ok = False

    def _plain(self, row):
        return row.spec.with_variant("plain")

    # 1
    def check_jacobi(self, res):
        for row in self.rows:
            spec = self._plain(row)
            rep = check_jacobi(self.ctx.handle(spec))
            self._note(res, row, rep.ok, f"{spec.label()} {rep.mode} checked={rep.checked}")

    # 2
    def check_heights(self, res):
        for row in self.rows:
            for r in table_rows("heights", row, self.ctx):
                self._note(res, row, r["match"], f"{row.spec.label()} height {r['computed']} expected {r['expected']}")

    # 3
    def check_outer_dims(self, res):
        for row in self.rows:
            for r in table_rows("outer-dims", row, self.ctx):
                self._note(res, row, r["match"],
                           f"{r['family']} {r['variant']} t={r['t']} outer {r['computed']} expected {r['expected']}")

    # 4
    def check_exceptional(self, res):
        for row in self.rows:
            spec = self._plain(row)
            if spec.family == "HO":
                h = self.ctx.handle(spec)
                c = ds.check_candidate(h, ds.candidate_phi(h))
                ok = c["derivation"] and c["inner"] is False
                self._note(res, row, ok, f"Phi on {spec.label()}: derivation={c['derivation']} inner={c['inner']}")
            if spec.family == "SHO" and spec.m == 3:
                s2 = spec.with_variant("derived2")
                h = self.ctx.handle(s2)
                theta = ds.candidate_theta(h)
                c = ds.check_candidate(h, theta)
                ok = c["derivation"] and c["inner"] is False
                self._note(res, row, ok, f"Theta on {s2.label()}: derivation={c['derivation']} inner={c['inner']}"
                                         f" parity={theta.parity} shift={theta.zshift}")
                rep = self.ctx.der(s2)
                nor = self.ctx.nor(s2)
                with_t = ds.reconstruct(h, rep, nor, [theta])
                without = ds.reconstruct(h, rep, nor, [])
                drop = with_t.predicted_dim - without.predicted_dim
                self._note(res, row, with_t.equal and drop == 1,
                           f"dropping Theta lowers the span by {drop} (Der_0 {with_t.der0_dim})")

    # 5
    def check_normalizers(self, res):
        for row in self.rows:
            for r in table_rows("normalizers", row, self.ctx):
                self._note(res, row, r["match"],
                           f"Nor({row.spec.label()}) dim {r['computed']} listed {r['expected']} equal={r['match']}")
            spec = self._plain(row)
            pairs = []
            if spec.family in ("S", "H", "K"):
                pairs.append("derived1")
            if spec.family in ("SHO", "SKO"):
                pairs.append("derived2")
            for v in pairs:
                a, b = self.ctx.nor(spec), self.ctx.nor(spec.with_variant(v))
                self._note(res, row, a == b, f"Nor({spec.label()}) = Nor({spec.with_variant(v).label()}): {a == b}")
            self.ctx.release(spec)

    # 6
    def check_decompositions(self, res):
        for row in self.rows:
            spec = self._plain(row)
            dim = lambda v: self.ctx.handle(spec.with_variant(v)).dim
            if spec.family == "S":
                d = dim("bar") - dim("derived1")
                self._note(res, row, d == spec.m + 1, f"{spec.label()}: dim Sbar - dim S^(1) = {d}, m+1 = {spec.m + 1}")
            if spec.family == "K":
                d = dim("plain") - dim("derived1")
                e = ds.delta_prime(spec.n - spec.m, 3, spec.p)
                self._note(res, row, d == e, f"{spec.label()}: dim K - dim K^(1) = {d}, expected {e}")
            if spec.family == "H" and all(x == 1 for x in spec.t):
                d = dim("bar") - dim("derived1")
                self._note(res, row, d == spec.m + 1, f"{spec.label()}: dim Hbar - dim H^(1) = {d}, m+1 = {spec.m + 1}")

    # 7
    SIMPLE = {"W": ("plain",), "S": ("derived1",), "H": ("derived1",), "K": ("derived1",),
              "HO": ("plain",), "SHO": ("derived2",), "KO": ("plain",), "SKO": ("derived2",)}
    NOT_SIMPLE = {"S": ("plain", "bar"), "H": ("bar",), "HO": ("bar",), "SHO": ("plain", "bar"),
                  "SKO": ("plain",)}

    def check_simplicity(self, res):
        for row in self.rows:
            spec = self._plain(row)
            for v in self.SIMPLE.get(spec.family, ()):
                s = spec.with_variant(v)
                got = is_simple(self.ctx.handle(s))
                self._note(res, row, got, f"{s.label()} simple={got}")
            for v in self.NOT_SIMPLE.get(spec.family, ()):
                s = spec.with_variant(v)
                got = is_simple(self.ctx.handle(s))
                self._note(res, row, not got, f"{s.label()} simple={got}")
            self.ctx.release(spec)

    # 8
    AGREEMENT = (("W", 1, (1,), 2), ("H", 2, (1, 1), 2), ("K", 1, (1,), 2))

    def check_solver(self, res):
        for fam, m, t, n in self.AGREEMENT:
            spec = AlgebraSpec(fam, m, 5, t, n=n)
            a, b = self.ctx.der(spec, "full"), self.ctx.der(spec, "weight_reduced")
            ok = ds.compare_modes(a, b) and a.mode == "full" and b.mode == "weight_reduced"
            res.lines.append(f"{'ok' if ok else 'MISMATCH'}: {spec.label()} full/reduced total {a.total}/{b.total}")
            res.ok &= ok
        for row in self.rows:
            spec = self._plain(row)
            targets = [spec]
            if spec.family == "SHO":
                targets.append(spec.with_variant("derived2"))
            for s in targets:
                h = self.ctx.handle(s)
                rep = self.ctx.der(s)
                nor = self.ctx.nor(s)
                extra = ds.ppower_candidates(h)
                if s.family == "HO":
                    extra.append(ds.candidate_phi(h))
                if s.family == "SHO" and s.variant == "derived2" and s.m == 3:
                    extra.append(ds.candidate_theta(h))
                predicted = nor.dim + ds.candidate_count(s)
                rec = ds.reconstruct(h, rep, nor, extra)
                ok = rep.total == predicted and rec.equal
                self._note(res, row, ok, f"{s.label()}: dim Der {rep.total}, Nor {nor.dim} + candidates "
                                         f"{ds.candidate_count(s)} = {predicted}; spans Der_0: {rec.equal}")
                if all(x == 1 for x in s.t):
                    s2 = spec.with_variant("derived2")
                    h2, rep2 = self.ctx.handle(s2), self.ctx.der(s2)
                    neg = int((h2.deg < 0).sum())
                    want = neg + int(s.family == "HO") + int(s.family == "SHO" and s.m == 3)
                    got = ds.negative_der_dim(rep2)
                    if s is targets[0]:
                        self._note(res, row, got == want, f"{s2.label()}: negative Der {got}, expected {want}")
            self.ctx.release(spec)

    # 9
    def check_restricted(self, res):
        seen = set()
        for row in self.rows:
            spec = self._plain(row)
            if spec.family != "W" or spec in seen:
                continue
            seen.add(spec)
            for i in range(1, spec.m + spec.n + 1):
                ok = ds.restrictedness_holds(spec.params, i)
                self._note(res, row, ok, f"{spec.label()}: (ad d_{i})^(p^t_{i}) = 0: {ok}")
            h = self.ctx.handle(spec)
            rep = self.ctx.der(spec)
            cands = ds.ppower_candidates(h)
            rows_ = []
            ok = True
            for c in cands:
                sol = rep.blocks.get((c.zshift, c.parity))
                inside, inner, coords = ds.classify(sol, c.matrix, h.p) if sol else (False, False, None)
                ok &= inside and not inner and coords is not None
                if coords is not None:
                    vec = np.zeros(rep.outer, dtype=np.int64)
                    start = sum(s.outer.shape[0] for key, s in sorted(rep.blocks.items())
                                if key < (c.zshift, c.parity))
                    vec[start:start + coords.size] = coords
                    rows_.append(vec)
            rank = rref(np.array(rows_), h.p)[0].shape[0] if rows_ else 0
            want = spec.eta - spec.m
            ok &= rank == len(cands) == want
            self._note(res, row, ok, f"{spec.label()}: {len(cands)} p-power maps, independent outer rank {rank}, eta-m = {want}")

    # 10
    def check_abelian(self, res):
        for row in self.rows:
            spec = self._plain(row)
            targets = [spec]
            if spec.family == "K":
                targets.append(spec.with_variant("derived1"))
            for s in targets:
                rep = self.ctx.der(s)
                must = s.family in ("W", "S", "H", "K", "KO")
                ok = rep.abelian or not must
                self._note(res, row, ok, f"{s.label()}: outer dim {rep.outer}, abelian={rep.abelian}"
                                         + ("" if must else " (reported)"))
                if not rep.abelian:
                    table, _ = ds.outer_bracket(self.ctx.handle(s), rep)
                    res.lines.append(f"    outer brackets {sorted(table.items())}")
            for s in outer_variants(spec):
                if s.family in ("SHO", "SKO") and s.variant != "plain":
                    rep = self.ctx.der(s)
                    res.lines.append(f"reported: {s.label()} outer dim {rep.outer}, abelian={rep.abelian}")
