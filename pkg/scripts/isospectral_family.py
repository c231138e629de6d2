"""Sweep the deformation time for one index and check what moves and what stays put.

For each t the deformed potential is re-solved; eigenvalues should not move, the
norming constant of the chosen index should scale by exp(-t), all others by 1.

    python scripts/isospectral_family.py --m 1 --t-min -2 --t-max 2 --steps 9
"""

import argparse
import math

import numpy as np

from diracspec import BoundaryParams, CanonicalPotential, Grid, SearchWindow, deform_single_detail, locate_eigenvalues
from diracspec.config import write_table
from diracspec.isospectral import intertwining_residual


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=0)
    ap.add_argument("--t-min", type=float, default=-2.0)
    ap.add_argument("--t-max", type=float, default=2.0)
    ap.add_argument("--steps", type=int, default=9)
    ap.add_argument("--span", type=int, default=8, help="check indices |n| <= span")
    ap.add_argument("--out", default="isospectral_family.csv")
    args = ap.parse_args()

    pot = CanonicalPotential.gauss_bumps([(1.2, 0.3, 0.8, 0.0), (2.0, 0.4, 0.0, 0.5)])
    bd, grid = BoundaryParams(), Grid(math.pi)
    win = SearchWindow(-args.span, args.span)
    before = locate_eigenvalues(pot, bd, win, grid)
    cols = {k: [] for k in ("t", "drift", "ratio_error", "others_error", "sup_change", "residual")}
    for t in np.linspace(args.t_min, args.t_max, args.steps):
        d = deform_single_detail(pot, bd, args.m, float(t), grid)
        after = locate_eigenvalues(d.potential, bd, win, grid)
        p0, q0 = pot.on_grid(grid)
        p1, q1 = d.potential.on_grid(grid)
        cols["t"].append(float(t))
        cols["drift"].append(max(abs(after[n].lam - before[n].lam) for n in before.indices))
        cols["ratio_error"].append(abs(after[args.m].a / before[args.m].a - math.exp(-t)))
        cols["others_error"].append(max(abs(after[n].a / before[n].a - 1) for n in before.indices if n != args.m))
        cols["sup_change"].append(float(np.max(np.hypot(p1 - p0, q1 - q0))))
        cols["residual"].append(intertwining_residual(d.w, d.potential, d.lam))
        print(f"t={t:+.3f}  drift={cols['drift'][-1]:.2e}  ratio err={cols['ratio_error'][-1]:.2e}  "
              f"others={cols['others_error'][-1]:.2e}  |dOmega|={cols['sup_change'][-1]:.3f}")
    write_table(args.out, tuple(cols), tuple(cols.values()))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
