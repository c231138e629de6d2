"""Insert a level into the confining model p(x) = x and rescale its norming constant.

Reports the truncated spectrum before and after each step and writes the potentials.

    python scripts/surgery_window.py --mu 0.7 --t 1.0 --window 12
"""

import argparse

from diracspec import CanonicalPotential, SurgeryPlan, SurgeryStep, WindowContext, window_spectrum
from diracspec.config import write_table
from diracspec.surgery import compose_surgery_detail


def show(label, table):
    levels = ", ".join(f"{d.lam:+.6f} (a={d.a:.4f})" for d in table)
    print(f"{label}: {levels}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mu", type=float, default=0.7)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--window", type=float, default=12.0)
    ap.add_argument("--lo", type=float, default=-3.5)
    ap.add_argument("--hi", type=float, default=3.5)
    ap.add_argument("--prefix", default="surgery")
    args = ap.parse_args()

    ctx = WindowContext(args.window)
    pot = CanonicalPotential.linear(1.0, args.window)
    plan = SurgeryPlan([SurgeryStep("add", args.mu, c=args.c), SurgeryStep("scale", args.mu, t=args.t)],
                       args.window)
    show("original", window_spectrum(pot, 0.0, ctx, args.lo, args.hi))
    chain = compose_surgery_detail(pot, 0.0, plan, ctx)
    for k, s in enumerate(chain.steps, start=1):
        show(f"after step {k} ({plan.steps[k - 1].op})", window_spectrum(s.potential, 0.0, ctx, args.lo, args.hi))
        a, b = s.norm_identity()
        print(f"  residual {s.residual(ctx.theta_floor):.2e}, norm identity error {abs(a - b):.2e}")
        p, q = s.potential.on_grid(ctx.grid)
        write_table(f"{args.prefix}.step{k}.csv", ("x", "p", "q"), (ctx.grid.nodes, p, q))


if __name__ == "__main__":
    main()
