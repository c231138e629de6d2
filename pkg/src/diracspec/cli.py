"""Command-line front end.

    diracspec solve --config run.cfg --n-min -5 --n-max 5 --out spectrum.csv
    diracspec gradient --config run.cfg --n 0 --check-fd --out grad.csv
    diracspec deform --config run.cfg --m 0 --t 1 --verify --out deformed.csv
    diracspec deform-seq --config run.cfg --schedule sched.csv --out deformed.csv
    diracspec surgery add --config window.cfg --mu 1 --c 1 --out added.csv
    diracspec surgery plan --config window.cfg --plan plan.csv --out final.csv
    diracspec fit --config run.cfg --target spectrum.csv --out fitted.csv
    diracspec verify --suite all

Every command exits 0 on success and 1 when an error contract fires, with the
diagnostic on stderr. Without ``--out`` tables go to stdout.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from pathlib import Path

from .config import ConfigError, RunConfig, read_rows, render_table
from .errors import DiracError, FitError, PreconditionError
from .gradient import (
    FitProblem,
    directional_derivative_fd,
    fit_spectrum,
    gradient_bundle,
    pairing,
    random_directions,
)
from .isospectral import deform_sequence_detail, deform_single_detail
from .model import DeformationSchedule, Perturbation, SurgeryPlan, SurgeryStep
from .spectrum import SearchWindow, locate_eigenvalues
from .surgery import (
    WindowContext,
    add_eigenvalue_detail,
    compose_surgery_detail,
    nearest_level,
    remove_eigenvalue_detail,
    scale_norming_detail,
    truncate,
    window_eigenfunction,
    window_spectrum,
)
from .verify import SUITES, run_suite


class Reporter:
    """Report lines on stdout; tables go to ``--out`` or stdout."""

    def __init__(self, out: str | None):
        self.out = out

    def table(self, header, columns, comments=(), trailer=(), path=None):
        text = render_table(header, columns, comments, trailer)
        path = path or self.out
        if path:
            Path(path).write_text(text)
        else:
            sys.stdout.write(text)

    def say(self, line: str):
        # reports share stdout with tables only when no --out was given
        print(line if self.out else f"# {line}")


def use_color() -> bool:
    return "NO_COLOR" not in os.environ and sys.stdout.isatty()


def load_config(args) -> RunConfig:
    return RunConfig.load(args.config) if args.config else RunConfig()


def require_mode(cfg: RunConfig, mode: str, what: str):
    if cfg.mode != mode:
        raise PreconditionError(f"{what} requires mode = {mode} (config has mode = {cfg.mode})")


def potential_columns(pot, grid):
    p, q = pot.on_grid(grid)
    return grid.nodes, p, q


# commands ---------------------------------------------------------------------


def cmd_solve(args) -> int:
    cfg = load_config(args)
    pot, bd, rep = cfg.build_potential(), cfg.boundary, Reporter(args.out)
    if cfg.mode == "finite":
        n_min = cfg.n_min if args.n_min is None else args.n_min
        n_max = cfg.n_max if args.n_max is None else args.n_max
        window = SearchWindow.around(n_min, n_max, bd, scan_step=cfg.scan_step, refine_tol=cfg.refine_tol)
        table = locate_eigenvalues(pot, bd, window, cfg.grid())
    else:
        ctx = WindowContext(cfg.domain_end, cfg.theta_floor, cfg.grid(), cfg.beta)
        table = window_spectrum(pot, cfg.alpha, ctx, args.lo, args.hi)
    rows = list(table.data.values())
    rep.table(("n", "lambda", "a", "b", "r", "c"),
              ([d.n for d in rows], [d.lam for d in rows], [d.a for d in rows],
               [d.b for d in rows], [d.r for d in rows], [d.c for d in rows]))
    return 0


def cmd_gradient(args) -> int:
    cfg = load_config(args)
    require_mode(cfg, "finite", "gradient")
    if not cfg.n_min <= args.n <= cfg.n_max:
        raise ConfigError(f"index n={args.n} outside the solved window [{cfg.n_min}, {cfg.n_max}]")
    pot, bd, grid = cfg.build_potential(), cfg.boundary, cfg.grid()
    window = SearchWindow.around(min(args.n, 0), max(args.n, 0), bd,
                                 scan_step=cfg.scan_step, refine_tol=cfg.refine_tol)
    datum = locate_eigenvalues(pot, bd, window, grid)[args.n]
    g = gradient_bundle(pot, bd, datum, grid)
    head = [f"n={args.n}", f"lambda={float(datum.lam)!r}", f"d_alpha={float(g.d_alpha)!r}",
            f"d_beta={float(g.d_beta)!r}"]
    trailer = []
    if args.check_fd:
        for i, ch in enumerate("pq"):
            d = g.d_p if ch == "p" else g.d_q
            for k, v in enumerate(random_directions(grid, args.seed + i)):
                an = pairing(d, v, grid)
                fd = directional_derivative_fd(pot, bd, args.n, Perturbation(v, args.eps, ch), grid, datum.lam)
                trailer.append(f"fd_relerr_{ch}_{k}={float(abs(fd - an) / max(1.0, abs(an)))!r}")
    Reporter(args.out).table(("x", "d_p", "d_q"), (grid.nodes, g.d_p, g.d_q), head, trailer)
    return 0


def deformation_report(pot, bd, grid, before_pot, t_of, lo=-8, hi=8):
    window = SearchWindow.around(lo, hi, bd)
    before = locate_eigenvalues(before_pot, bd, window, grid)
    after = locate_eigenvalues(pot, bd, window, grid)
    drift = float(max(abs(after[n].lam - before[n].lam) for n in before.indices))
    ratio = float(max(abs(after[n].a / before[n].a - math.exp(-t_of(n))) for n in before.indices))
    return [f"max_eigenvalue_drift={drift!r}", f"max_norming_ratio_error={ratio!r}"]


def cmd_deform(args) -> int:
    cfg = load_config(args)
    require_mode(cfg, "finite", "deform")
    pot, bd, grid = cfg.build_potential(), cfg.boundary, cfg.grid()
    d = deform_single_detail(pot, bd, args.m, args.t, grid)
    return finish_deformation(args, d.potential, pot, bd, grid, lambda n: args.t if n == args.m else 0.0)


def read_schedule(path) -> DeformationSchedule:
    t = {}
    for lineno, (n, v) in read_rows(path, ("n", "t_n")):
        try:
            n, v = int(n), float(v)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: malformed schedule row {n},{v}") from None
        if n in t:
            raise ConfigError(f"{path}:{lineno}: duplicate index {n}")
        t[n] = v
    return DeformationSchedule(t)


def cmd_deform_seq(args) -> int:
    cfg = load_config(args)
    require_mode(cfg, "finite", "deform-seq")
    pot, bd, grid = cfg.build_potential(), cfg.boundary, cfg.grid()
    sched = read_schedule(args.schedule)
    stages = deform_sequence_detail(pot, bd, sched, grid)
    final = stages[-1].potential if stages else pot.restricted(grid)
    span = max((abs(n) for n in sched.t), default=0) + 2
    return finish_deformation(args, final, pot, bd, grid, sched.value, -max(8, span), max(8, span))


def finish_deformation(args, final, pot, bd, grid, t_of, lo=-8, hi=8) -> int:
    rep = Reporter(args.out)
    report = deformation_report(final, bd, grid, pot, t_of, lo, hi) if args.verify else []
    rep.table(("x", "p", "q"), potential_columns(final, grid), trailer=report)
    if args.out:
        for line in report:
            rep.say(line)
    return 0


def window_context(cfg: RunConfig, args) -> WindowContext:
    x_end = args.window if args.window is not None else cfg.domain_end
    return WindowContext(x_end, cfg.theta_floor, cfg.grid(x_end), cfg.beta)


def surgery_report(s, floor) -> list[str]:
    a, b = (float(v) for v in s.norm_identity())
    return [f"gamma={s.gamma!r}", f"nu={s.nu!r}", f"max_residual={float(s.residual(floor))!r}",
            f"w_norm_sq={a!r}", f"norm_identity_error={abs(a - b)!r}"]


def cmd_surgery(args) -> int:
    cfg = load_config(args)
    require_mode(cfg, "half-line-window", f"surgery {args.op}")
    # the window potential is built on the window, not on the config's default domain
    ctx = window_context(cfg, args)
    if args.window is not None:
        cfg.x_end = ctx.window_end
    pot = cfg.build_potential()
    rep = Reporter(args.out)
    if args.op == "plan":
        return run_plan(args, cfg, pot, ctx, rep)
    if args.op == "add":
        s = add_eigenvalue_detail(pot, cfg.alpha, args.mu, args.c, ctx)
    else:
        lam = nearest_level(pot, cfg.alpha, args.mu, ctx)
        h = window_eigenfunction(pot, cfg.alpha, lam, ctx)
        if args.sub_window is not None:
            ctx = ctx.sub_window(args.sub_window)
            h = truncate(h, ctx.grid)
        if args.op == "remove":
            s = remove_eigenvalue_detail(pot, cfg.alpha, lam, h, ctx)
        else:
            s = scale_norming_detail(pot, cfg.alpha, lam, args.t, h, ctx)
    report = surgery_report(s, ctx.theta_floor)
    rep.table(("x", "p", "q"), potential_columns(s.potential, ctx.grid), trailer=report)
    if args.out:
        for line in report:
            rep.say(line)
    return 0


def read_plan(path, window_end: float) -> SurgeryPlan:
    steps = []
    for lineno, (op, nu, t, c) in read_rows(path, ("op", "nu", "t", "c")):
        try:
            steps.append(SurgeryStep(op, float(nu), float(t or 0.0), float(c or 1.0)))
        except (ValueError, DiracError) as exc:
            raise ConfigError(f"{path}:{lineno}: bad plan row: {exc}") from None
    if not steps:
        raise ConfigError(f"{path}: plan has no steps")
    return SurgeryPlan(tuple(steps), window_end)


def sidecar(out: str | None, k: int) -> Path:
    base = Path(out) if out else Path("surgery.csv")
    return base.with_name(f"{base.stem}.step{k}{base.suffix or '.csv'}")


def run_plan(args, cfg, pot, ctx, rep: Reporter) -> int:
    if not args.plan:
        raise ConfigError("surgery plan needs --plan PATH")
    plan = read_plan(args.plan, ctx.window_end)
    chain = compose_surgery_detail(pot, cfg.alpha, plan, ctx)
    for k, s in enumerate(chain.steps, start=1):
        report = surgery_report(s, ctx.theta_floor)
        path = sidecar(args.out, k)
        rep.table(("x", "p", "q"), potential_columns(s.potential, ctx.grid), trailer=report, path=path)
        rep.say(f"step {k} ({plan.steps[k - 1].op}) -> {path}: " + ", ".join(report))
    rep.table(("x", "p", "q"), potential_columns(chain.final, ctx.grid))
    return 0


def read_target(path) -> list[tuple[int, float]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"target file not found: {path}")
    out, header = [], None
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if header is None:
            if cells[:2] != ["n", "lambda"]:
                raise ConfigError(f"{path}:{lineno}: target header must start with n,lambda")
            header = cells
            continue
        try:
            if len(cells) != len(header):
                raise ValueError
            out.append((int(cells[0]), float(cells[1])))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: malformed target row {line!r}") from None
    if not out:
        raise ConfigError(f"{path}: no target rows")
    return out


def cmd_fit(args) -> int:
    cfg = load_config(args)
    require_mode(cfg, "finite", "fit")
    grid = cfg.grid()
    problem = FitProblem(read_target(args.target), cfg.build_potential(), grid, cfg.boundary,
                         learn_rate=args.lr, max_iters=args.iters, channel_mask=args.channel)
    rep = Reporter(args.out)
    history_path = args.history or (Path(args.out).with_suffix(".history.csv") if args.out else None)
    try:
        res = fit_spectrum(problem)
        pot, history, code = res.potential, res.history, 0
    except FitError as exc:
        print(f"error: {exc}; writing last stable iterate", file=sys.stderr)
        pot, history, code = exc.last_potential, exc.history, 1
    rep.table(("x", "p", "q"), potential_columns(pot, grid))
    rep.table(("iter", "misfit"), (list(range(len(history))), history), path=history_path)
    rep.say(f"final misfit={float(history[-1])!r} after {len(history) - 1} iterations")
    return code


def cmd_verify(args) -> int:
    color = use_color()
    start = time.perf_counter()
    ok = True
    for check in run_suite(args.suite):
        print(check.line(color), flush=True)
        ok &= check.passed
    print(f"{'all checks passed' if ok else 'some checks FAILED'} in {time.perf_counter() - start:.1f} s")
    return 0 if ok else 1


# parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diracspec", description="Spectra, gradients and transforms of "
                                 "canonical Dirac operators.")
    ap.add_argument("--threads", type=int, default=0, help="worker threads (0 = all available)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="key = value run configuration")
        p.add_argument("--out", help="output CSV (default: stdout)")
        return p

    p = common(sub.add_parser("solve", help="eigenvalues and norming constants"))
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--lo", type=float, default=-3.0, help="window mode: lower end of the search")
    p.add_argument("--hi", type=float, default=3.0, help="window mode: upper end of the search")
    p.set_defaults(func=cmd_solve)

    p = common(sub.add_parser("gradient", help="eigenvalue gradient for one index"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--check-fd", action="store_true")
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradient)

    p = common(sub.add_parser("deform", help="single isospectral deformation"))
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_deform)

    p = common(sub.add_parser("deform-seq", help="sequence of isospectral deformations"))
    p.add_argument("--schedule", required=True, help="CSV with n,t_n rows")
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_deform_seq)

    p = common(sub.add_parser("surgery", help="add, remove or rescale a level on a window"))
    p.add_argument("op", choices=("add", "remove", "scale", "plan"))
    p.add_argument("--mu", type=float, help="level to add, or a guess of the level to act on")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--window", type=float)
    p.add_argument("--sub-window", type=float, help="apply remove/scale on [0, X'] only")
    p.add_argument("--plan", help="CSV with op,nu,t,c rows")
    p.set_defaults(func=cmd_surgery)

    p = common(sub.add_parser("fit", help="fit a potential to target eigenvalues"))
    p.add_argument("--target", required=True, help="CSV whose header starts with n,lambda")
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--lr", type=float, default=1.0)
    p.add_argument("--channel", choices=("p", "q", "both"), default="p")
    p.add_argument("--history", help="history CSV (default: <out>.history.csv)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", help="run the bundled invariant suites")
    p.add_argument("--suite", choices=("all",) + SUITES, default="all")
    p.set_defaults(func=cmd_verify)
    return ap


def set_threads(n: int):
    import numba

    if n < 0:
        raise ConfigError("--threads must be non-negative")
    if n:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "surgery" and args.op != "plan" and args.mu is None:
        print(f"error: surgery {args.op} needs --mu", file=sys.stderr)
        return 2
    try:
        set_threads(args.threads)
        return args.func(args)
    except (DiracError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
