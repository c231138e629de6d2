"""Tabulate the eigenvalue and norming-constant remainders of a smooth potential.

    python scripts/remainder_decay.py --n-max 30 --out remainders.csv
"""

import argparse
import math

from diracspec import BoundaryParams, CanonicalPotential, Grid, SearchWindow, asymptotic_remainders, locate_eigenvalues
from diracspec.config import write_table


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=30)
    ap.add_argument("--alpha", type=float, default=0.0)
    ap.add_argument("--points", type=int, default=8001)
    ap.add_argument("--out", default="remainders.csv")
    args = ap.parse_args()

    pot = CanonicalPotential.gauss_bumps([(1.2, 0.3, 0.8, 0.0), (2.0, 0.4, 0.0, 0.5)])
    bd = BoundaryParams(args.alpha, 0.0)
    grid = Grid(math.pi, args.points)
    table = locate_eigenvalues(pot, bd, SearchWindow.around(-args.n_max, args.n_max, bd), grid)
    rep = asymptotic_remainders(table)
    for line in rep.lines():
        print(line)
    for lo, hi in ((2, 8), (8, 16), (16, args.n_max)):
        print(f"max |r_n| for {lo} <= |n| <= {hi}: {rep.max_abs_r(lo, hi):.3e}")
    rows = list(table)
    write_table(args.out, ("n", "lambda", "a", "b", "r", "c"),
                ([d.n for d in rows], [d.lam for d in rows], [d.a for d in rows],
                 [d.b for d in rows], [d.r for d in rows], [d.c for d in rows]))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
