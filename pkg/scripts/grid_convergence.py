"""Eigenvalue and norming-constant error against grid size for a smooth potential.

The reference is the solve on the finest grid; the observed order should be about 4.

    python scripts/grid_convergence.py --n 5
"""

import argparse
import math

import numpy as np

from diracspec import BoundaryParams, CanonicalPotential, Grid, SearchWindow, locate_eigenvalues


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=5, help="largest |n| compared")
    ap.add_argument("--sizes", type=int, nargs="+", default=[101, 201, 401, 801, 1601])
    ap.add_argument("--reference", type=int, default=32001)
    args = ap.parse_args()

    pot = CanonicalPotential.gauss_bumps([(1.2, 0.3, 0.8, 0.0), (2.0, 0.4, 0.0, 0.5)])
    bd, win = BoundaryParams(0.2, -0.1), SearchWindow.around(-args.n, args.n, BoundaryParams(0.2, -0.1))
    ref = locate_eigenvalues(pot, bd, win, Grid(math.pi, args.reference))
    prev = None
    print(f"{'points':>7} {'lambda err':>11} {'a err':>11} {'order':>6}")
    for size in args.sizes:
        t = locate_eigenvalues(pot, bd, win, Grid(math.pi, size))
        el = max(abs(t[n].lam - ref[n].lam) for n in ref.indices)
        ea = max(abs(t[n].a - ref[n].a) for n in ref.indices)
        order = "" if prev is None else f"{np.log2(prev / el):6.2f}"
        print(f"{size:7d} {el:11.3e} {ea:11.3e} {order}")
        prev = el


if __name__ == "__main__":
    main()
