"""Time the grid kernels of both backends on the default grid.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--resolution 200]

Prints one row per (spec, kernel) with the best wall time of each backend,
the speed-up, and the largest disagreement between the two results.
"""

import argparse
import sys
import timeit

import numpy as np

from infostab import kernels
from infostab.domain import make_interior_grid
from infostab.equation import COMB, LogForm, Perturbed, PowerForm, _plan
from infostab.generators import sample_points, tabulate

SPECS = [
    ("power a=2 b=-1 alpha=-0.5", PowerForm(2.0, -1.0), -0.5),
    ("power a=1 b=3 alpha=-2.7", PowerForm(1.0, 3.0), -2.7),
    ("log lam=1.5 c=0", LogForm(1.5, 0.0), 0.0),
    ("power+uniform noise alpha=-1", Perturbed(PowerForm(1.0, 1.0), 1e-3, 7), -1.0),
    ("log+comb noise", Perturbed(LogForm(1.0, 0.0), 1e-3, 7, COMB), 0.0),
    ("table 2000 knots alpha=-1", tabulate(PowerForm(1.0, 0.0), -1.0, sample_points(2000)), -1.0),
]


def best_of(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--resolution", type=int, default=200)
    ap.add_argument("--margin", type=float, default=1e-3)
    args = ap.parse_args(argv)

    backends = kernels.backends()
    if "cython" not in backends:
        print("compiled extension not importable; timing the numpy backend only")
    g = make_interior_grid(args.margin, args.resolution)
    xs = g.coordinates()
    print(f"grid: margin={args.margin} resolution={args.resolution} points={len(g)}")
    header = f"{'spec':32s} {'kernel':12s} {'python s':>10s} {'cython s':>10s} {'speed-up':>9s} {'max diff':>10s}"
    print(header)
    print("-" * len(header))
    for label, spec, alpha in SPECS:
        plan = _plan(spec, alpha)
        for kname, call in (("defect_field", lambda k: k.defect_field(*plan, g.x, g.y)),
                            ("eval_f", lambda k: k.eval_f(*plan, xs))):
            times, outs = {}, {}
            for name, mod in backends.items():
                outs[name] = call(mod)
                times[name] = best_of(lambda: call(mod), args.repeat)
            tp = times["python"]
            tc = times.get("cython", float("nan"))
            diff = (float(np.max(np.abs(outs["python"] - outs["cython"])))
                    if "cython" in outs else float("nan"))
            print(f"{label:32s} {kname:12s} {tp:10.4f} {tc:10.4f} {tp / tc:9.1f} {diff:10.2g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
