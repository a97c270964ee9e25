"""Existence/extinction verdicts on a grid of (s, n) points from a unit bump.

    python3 scripts/phase_check.py --points 0.8,0.2 0.6,0.5 --out phase.csv
"""

import argparse
import csv
import time

import numpy as np

from fracdiff.evolve import cached_operator
from fracdiff.frlap import in_existence_range
from fracdiff.grid import Field, Grid1D
from fracdiff.limits import build_ladder, extinction_verdict
from fracdiff.nonlin import Nonlinearity
from fracdiff.selfsim import bump_values

DEFAULT_POINTS = ["0.8,0.2", "0.75,0.3", "0.75,0", "0.6,0.5", "0.4,0.2", "0.55,0.3"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", nargs="+", default=DEFAULT_POINTS, help="s,n pairs")
    ap.add_argument("--L", type=float, default=20.0)
    ap.add_argument("--n-points", type=int, default=513)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--out", default="phase.csv")
    args = ap.parse_args()

    grid = Grid1D(args.L, args.n_points)
    u0 = Field(grid, bump_values(grid.x, 0.0, 1.0))
    rows = []
    for item in args.points:
        s, n = (float(v) for v in item.split(","))
        t0 = time.perf_counter()
        ladder = build_ladder(cached_operator(grid, s), Nonlinearity(n), u0, t_end=args.t,
                              output_times=np.array([0.25, 0.5, 1.0]) * args.t)
        verdict = extinction_verdict(ladder, args.t).value
        dt = time.perf_counter() - t0
        rows.append((s, n, in_existence_range(s, n), verdict, round(dt, 1)))
        print(f"s={s:<5} n={n:<5} in range {str(rows[-1][2]):<5}  {verdict:<12} {dt:6.1f} s")
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "n", "in_range", "verdict", "seconds"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
