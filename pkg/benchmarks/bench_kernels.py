"""Compiled vs numpy row reduction over GF(p), plus one end-to-end solve.

    python3 benchmarks/bench_kernels.py [--sizes 50,100,200,400] [--repeat 3]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cartan_super import _kernels_py

try:
    from cartan_super import _kernels
except ImportError:
    _kernels = None


def bench_rref(n: int, p: int, repeat: int, rng) -> dict:
    # rank-deficient, like the Leibniz systems: 3/4 of full rank
    A = (rng.integers(0, p, (n, 3 * n // 4)) @ rng.integers(0, p, (3 * n // 4, n))) % p
    out = {"n": n}
    for name, mod in (("python", _kernels_py), ("cython", _kernels)):
        if mod is None:
            continue
        piv = None

        def run():
            nonlocal piv
            B = A.copy()
            piv = mod.rref_inplace(B, p)

        out[name] = min(timeit.repeat(run, number=1, repeat=repeat))
        out[name + "_rank"] = len(piv)
    return out


def bench_solver(pure: bool) -> float:
    code = ("import time;from cartan_super.families import AlgebraSpec, build;"
            "from cartan_super.dersolve import der_full;"
            "h=build(AlgebraSpec('H',2,5,(1,1),n=2));t=time.perf_counter();"
            "der_full(h, mode='full');print(time.perf_counter()-t)")
    env = dict(os.environ)
    if pure:
        env["CARTAN_SUPER_PURE"] = "1"
    else:
        env.pop("CARTAN_SUPER_PURE", None)
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(res.stdout.strip())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="50,100,200,400")
    ap.add_argument("--p", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--no-solver", action="store_true")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'n':>6} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for n in map(int, args.sizes.split(",")):
        r = bench_rref(n, args.p, args.repeat, rng)
        if "cython" in r:
            assert r["cython_rank"] == r["python_rank"]
            print(f"{n:>6} {r['python']:>10.4f} {r['cython']:>10.4f} {r['python'] / r['cython']:>8.1f}")
        else:
            print(f"{n:>6} {r['python']:>10.4f} {'n/a':>10}")
    if not args.no_solver:
        py, cy = bench_solver(True), bench_solver(False)
        print(f"full derivation solve of H(2,2;(1,1)): python {py:.2f}s, cython {cy:.2f}s")


if __name__ == "__main__":
    main()
