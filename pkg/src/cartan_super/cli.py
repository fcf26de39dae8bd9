"""Command-line front end: build, der, tables, verify."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

from . import dersolve as ds
from .acceptance import Context, Suite, load_grid, table_rows
from .families import AlgebraSpec, SpecError, build

EXIT_OK, EXIT_SPEC, EXIT_CONSISTENCY, EXIT_MISMATCH = 0, 2, 3, 4

# structure constants are only written for algebras up to this dimension
STRUCTURE_DIM_CAP = 400

CSV_COLUMNS = ["family", "variant", "m", "n", "p", "t", "lambda", "computed", "expected", "match"]


class ConsistencyError(RuntimeError):
    pass


def _spec_args(p: argparse.ArgumentParser):
    p.add_argument("--family", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--t", required=True, help="comma separated, e.g. 1,1,1")
    p.add_argument("--lambda", dest="lam", type=int)
    p.add_argument("--variant", default="plain", choices=["plain", "bar", "derived1", "derived2"])
    p.add_argument("--out", help="write JSON here instead of stdout")


def _spec(args) -> AlgebraSpec:
    try:
        t = tuple(int(x) for x in args.t.split(","))
    except ValueError:
        raise SpecError(f"bad --t {args.t!r}") from None
    return AlgebraSpec(args.family, args.m, args.p, t, n=args.n, variant=args.variant, lam=args.lam)


def _emit(payload: dict, out=None):
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_build(args) -> int:
    spec = _spec(args)
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        h = build(spec)
    data = h.to_json_dict(structure=h.dim <= STRUCTURE_DIM_CAP)
    data["warnings"] = list(spec.warnings)
    if h.dim > STRUCTURE_DIM_CAP:
        data["structure_omitted"] = f"dim > {STRUCTURE_DIM_CAP}"
    _emit({"data": data, "metadata": {"runtime_ms": round((time.perf_counter() - t0) * 1000, 1)}}, args.out)
    return EXIT_OK


def _table_algebra(path):
    from .structure import TableAlgebra
    with open(path) as fh:
        d = json.load(fh)
    consts = {}
    for i, j, k, c in d.get("brackets", []):
        consts[(i, j, k)] = c
    return TableAlgebra(d["p"], d["parity"], consts, d.get("degree"))


def cmd_der(args) -> int:
    if args.table:
        h, spec = _table_algebra(args.table), None
    else:
        spec = _spec(args)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            h = build(spec)
    modes = ["full", "weight_reduced"] if args.mode == "both" else [args.mode.replace("-", "_")]
    reps = [ds.der_full(h, mode=m, spec=spec) for m in modes]
    if len(reps) == 2 and not ds.compare_modes(*reps):
        sys.stderr.write("full and weight-reduced modes disagree\n")
        return EXIT_CONSISTENCY
    rep = reps[-1]
    data = rep.to_json_dict()
    runtime = data.pop("runtime_ms")
    if spec is not None:
        data["warnings"] = list(spec.warnings)
    _emit({"data": data, "metadata": {"runtime_ms": runtime}}, args.out)
    return EXIT_OK


def _rows_for(which, row):
    return table_rows(which, row, Context())


def cmd_tables(args) -> int:
    rows = load_grid(args.grid)
    if not args.slow:
        rows = [r for r in rows if not r.slow]
    jobs = args.jobs
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_rows_for, [args.which] * len(rows), rows))
    else:
        ctx = Context()
        results = [table_rows(args.which, r, ctx) for r in rows]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    bad = False
    for recs in results:
        for r in recs:
            w.writerow(r)
            bad |= r["asserted"] and not r["match"]
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_MISMATCH if bad and not args.report_only else EXIT_OK


def cmd_verify(args) -> int:
    if args.suite != "acceptance":
        raise SpecError(f"unknown suite {args.suite}")
    grid = args.grid
    if args.fixtures:
        grid = os.path.join(args.fixtures, "default.grid")
    try:
        rows = load_grid(grid)
    except (SpecError, OSError) as exc:
        print(f"FAIL grid ({exc})")
        return EXIT_SPEC
    suite = Suite(rows, include_slow=args.slow)
    only = args.only.split(",") if args.only else None
    unknown = set(only or ()) - set(Suite.NAMES)
    if unknown:
        raise SpecError(f"unknown check group(s): {', '.join(sorted(unknown))}")
    ok = True
    for res in suite.run(only):
        print(res.summary(), flush=True)
        if args.verbose or not res.ok:
            for line in res.lines:
                print("    " + line)
        ok &= res.ok
    return EXIT_OK if ok else EXIT_CONSISTENCY


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cartan-super", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    b = sub.add_parser("build", help="construct an algebra and print it as JSON")
    _spec_args(b)
    b.set_defaults(func=cmd_build)

    d = sub.add_parser("der", help="superderivations of an algebra")
    _spec_args(d)
    for a in d._actions:
        if a.dest in ("family", "m", "p", "t"):
            a.required = False
    d.add_argument("--mode", default="weight-reduced", choices=["full", "weight-reduced", "both"])
    d.add_argument("--table", help="JSON file with p, parity, brackets [[i,j,k,c],...] instead of a family")
    d.set_defaults(func=cmd_der)

    t = sub.add_parser("tables", help="computed vs expected tables as CSV")
    t.add_argument("which", choices=["heights", "outer-dims", "normalizers"])
    t.add_argument("--grid", help="grid file (default: the bundled grid)")
    t.add_argument("--jobs", type=int, default=int(os.environ.get("CARTAN_SUPER_JOBS", "1")))
    t.add_argument("--report-only", action="store_true", help="exit 0 even if rows mismatch")
    t.add_argument("--slow", action="store_true", help="include rows marked slow")
    t.add_argument("--out")
    t.set_defaults(func=cmd_tables)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--suite", default="acceptance")
    v.add_argument("--only", help="comma separated check groups")
    v.add_argument("--grid")
    v.add_argument("--fixtures", help="directory holding default.grid")
    v.add_argument("--slow", action="store_true")
    v.add_argument("-v", "--verbose", action="store_true")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.cmd == "der" and not args.table and not all(
            getattr(args, k) is not None for k in ("family", "m", "p", "t")):
        sys.stderr.write("der needs --family, --m, --p, --t or --table\n")
        return EXIT_SPEC
    try:
        return args.func(args)
    except (SpecError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_SPEC
    except (ConsistencyError, RuntimeError) as exc:
        sys.stderr.write(f"consistency failure: {exc}\n")
        return EXIT_CONSISTENCY


if __name__ == "__main__":
    sys.exit(main())
