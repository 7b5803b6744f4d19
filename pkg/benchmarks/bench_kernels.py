"""Time the compiled kernels against their pure-Python twins.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each row reports the best wall time per backend and the largest
difference between the two outputs.
"""
import argparse
import json
import math
import timeit

import numpy as np

from packlp import kernels
from packlp.pointprocess import LatticeSpec, _cholesky_r, lll_reduce
from packlp.specfun import _start_radius, _step_fraction


def _cases():
    x = np.linspace(-1, 1, 20001)
    y = np.linspace(0, 60, 20001)
    zs = -np.sinh(np.linspace(0, 6, 4001)) ** 2
    lam = 3.7
    a, b, c = 0.5 * (1 + 1j * lam), 0.5 * (1 - 1j * lam), 1.5
    B, _ = lll_reduce(LatticeSpec.from_name("E8").basis)
    R = _cholesky_r(B)
    return {
        "gegenbauer_table L=40": lambda m: m.gegenbauer_table(40, 0.5, x),
        "laguerre_table M=24": lambda m: m.laguerre_table(24, 0.0, y),
        "hyp2f1_series x1000": lambda m: [m.hyp2f1_series(a, b, c, -0.3 + 1e-4 * k) for k in range(1000)],
        "hyp2f1_negative 4001 pts": lambda m: m.hyp2f1_negative(a, b, c, zs, _start_radius(a, b, c), _step_fraction(a, b, c)),
        "enumerate E8 |v|^2<=4": lambda m: m.enumerate_lattice(R, 4.0),
    }


def _flat(out):
    if isinstance(out, tuple):
        out = out[0]
    if isinstance(out, list):
        out = [v[0] if isinstance(v, tuple) else v for v in out]
    return np.asarray(out)


def _diff(u, v):
    u, v = _flat(u), _flat(v)
    if u.shape != v.shape:
        return math.nan
    if u.dtype.kind in "iu":
        return float(not np.array_equal(np.sort(u, axis=0), np.sort(v, axis=0)))
    return float(np.max(np.abs(u - v))) if u.size else 0.0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the rows here")
    args = ap.parse_args(argv)
    found = kernels.backends()
    rows = []
    for name, fn in _cases().items():
        row = {"case": name}
        outs = {}
        for backend, mod in found.items():
            outs[backend] = fn(mod)
            row[backend] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        if len(outs) == 2:
            row["speedup"] = row["python"] / row["cython"]
            row["max_diff"] = _diff(outs["python"], outs["cython"])
        rows.append(row)
    width = max(len(r["case"]) for r in rows)
    print(f"{'case':{width}}  {'python [s]':>11}  {'cython [s]':>11}  {'speedup':>8}  {'max diff':>9}")
    for r in rows:
        cy = f"{r['cython']:11.4f}" if "cython" in r else f"{'-':>11}"
        sp = f"{r['speedup']:8.1f}" if "speedup" in r else f"{'-':>8}"
        md = f"{r['max_diff']:9.1e}" if "max_diff" in r else f"{'-':>9}"
        print(f"{r['case']:{width}}  {r['python']:11.4f}  {cy}  {sp}  {md}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
