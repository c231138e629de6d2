"""Bundled invariant suites run by ``diracspec verify``.

Each check compares a measured quantity against a bound; the oracles are closed
forms, finite differences and spectrum re-solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .errors import SingularityError
from .gradient import (
    boundary_derivative_fd,
    directional_derivative_fd,
    eigenvalue_of,
    grad_boundary,
    grad_potential,
    pairing,
    random_directions,
)
from .isospectral import deform_sequence_detail, deform_single_detail, intertwining_residual
from .model import BoundaryParams, CanonicalPotential, DeformationSchedule, Grid, Perturbation, SurgeryPlan, SurgeryStep
from .ode import integrate_left, integrate_right
from .spectrum import SearchWindow, estimate_boundary_alpha, locate_eigenvalues
from .surgery import (
    WindowContext,
    add_eigenvalue_detail,
    compose_surgery_detail,
    remove_eigenvalue_detail,
    scale_norming_detail,
    truncate,
    window_eigenfunction,
    window_spectrum,
)

SUITES = ("ode", "spectrum", "gradient", "isospectral", "surgery")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    bound: float
    passed: bool

    def line(self, color: bool = False) -> str:
        tag = "PASS" if self.passed else "FAIL"
        if color:
            tag = f"\033[32m{tag}\033[0m" if self.passed else f"\033[31m{tag}\033[0m"
        return f"{tag} {self.name}: {self.value:.3e} (bound {self.bound:.1e})"


def at_most(name: str, value: float, bound: float) -> Check:
    return Check(name, float(value), bound, bool(value <= bound))


def at_least(name: str, value: float, bound: float) -> Check:
    return Check(name, float(value), bound, bool(value >= bound))


def bump_model(domain_end: float = math.pi) -> CanonicalPotential:
    """Two Gaussian bumps, one per channel; the standard smooth test model."""
    return CanonicalPotential.gauss_bumps([(1.2, 0.3, 0.8, 0.0), (2.0, 0.4, 0.0, 0.5)], domain_end)


# suites ---------------------------------------------------------------------------


def suite_ode() -> Iterator[Check]:
    g = Grid(math.pi)
    x = g.nodes
    lam = 2.7
    sol = integrate_left(CanonicalPotential.zero(), 0.0, lam, g)
    err = max(np.max(np.abs(sol.y1 - np.sin(lam * x))), np.max(np.abs(sol.y2 + np.cos(lam * x))))
    yield at_most("ode free closed form", err, 1e-12)
    yield at_most("ode free norm accumulator", np.max(np.abs(sol.norm_accum - x)), 1e-12)

    c, lam = 0.5, 1.3
    sol = integrate_left(CanonicalPotential.constant(c, 0.0), 0.0, lam, g)
    k = math.sqrt(lam * lam - c * c)
    y1 = (lam + c) / k * np.sin(k * x)
    y2 = -np.cos(k * x)
    err = max(np.max(np.abs(sol.y1 - y1)), np.max(np.abs(sol.y2 - y2)))
    yield at_most("ode constant closed form", err, 1e-11)

    pot = bump_model()
    ref = integrate_left(pot, 0.2, 3.1, Grid(math.pi, 8001))
    errs = []
    for n in (201, 401):
        s = integrate_left(pot, 0.2, 3.1, Grid(math.pi, n))
        errs.append(math.hypot(s.y1[-1] - ref.y1[-1], s.y2[-1] - ref.y2[-1]))
    yield at_least("ode order (error ratio on grid halving)", errs[0] / errs[1], 8.0)

    bd = BoundaryParams(0.2, 0.0)
    lam = eigenvalue_of(pot, bd, 1, g)
    left = integrate_left(pot, bd.alpha, lam, g)
    right = integrate_right(pot, bd.beta, lam, g)
    w = left.y1 * right.y2 - left.y2 * right.y1
    yield at_most("ode bracket constancy at eigenvalue", np.ptp(w), 1e-10)


def suite_spectrum() -> Iterator[Check]:
    g = Grid(math.pi)
    bd = BoundaryParams()
    table = locate_eigenvalues(CanonicalPotential.zero(), bd, SearchWindow(-20, 20), g)
    yield at_most("free eigenvalues |n|<=20", max(abs(d.lam - n) for n, d in table.data.items()), 1e-9)
    yield at_most("free norming constants", max(abs(d.a - math.pi) for d in table.data.values()), 1e-8)
    for c in (0.3, 0.5):
        t = locate_eigenvalues(CanonicalPotential.constant(c), bd, SearchWindow(-1, 1), g, norming=False)
        err = max(abs(t[0].lam + c), abs(t[1].lam - math.hypot(1, c)), abs(t[-1].lam + math.hypot(1, c)))
        yield at_most(f"constant p={c} closed form", err, 1e-8)
    bd = BoundaryParams(math.pi / 4, 0.0)
    t = locate_eigenvalues(CanonicalPotential.zero(), bd, SearchWindow.around(-12, 12, bd), g)
    yield at_most("alpha estimator free", abs(estimate_boundary_alpha(t, 5) - math.pi / 4), 1e-8)


def suite_gradient(seed: int = 1) -> Iterator[Check]:
    g = Grid(math.pi)
    bd = BoundaryParams()
    table = locate_eigenvalues(CanonicalPotential.zero(), bd, SearchWindow(-2, 2), g)
    da, db = grad_boundary(CanonicalPotential.zero(), bd, table[0], g)
    yield at_most("free boundary gradient", max(abs(da + 1 / math.pi), abs(db - 1 / math.pi)), 1e-8)

    pot = bump_model()
    bd = BoundaryParams(0.2, 0.1)
    table = locate_eigenvalues(pot, bd, SearchWindow.around(-3, 3, bd), g)
    worst = 0.0
    for n in range(-2, 3):
        da, db = grad_boundary(pot, bd, table[n], g)
        fa = boundary_derivative_fd(pot, bd, n, "alpha", 1e-4, g, table[n].lam)
        fb = boundary_derivative_fd(pot, bd, n, "beta", 1e-4, g, table[n].lam)
        worst = max(worst, abs(fa - da), abs(fb - db))
    yield at_most("boundary gradient vs FD (bump)", worst, 1e-5)

    worst = 0.0
    dirs = {ch: random_directions(g, seed + i) for i, ch in enumerate("pq")}
    for n in range(-3, 4):
        d_p, d_q = grad_potential(pot, bd, table[n], g)
        for ch, d in (("p", d_p), ("q", d_q)):
            for v in dirs[ch]:
                an = pairing(d, v, g)
                fd = directional_derivative_fd(pot, bd, n, Perturbation(v, 1e-3, ch), g, table[n].lam)
                worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    yield at_most("potential gradient vs FD (bump, 3 directions per channel)", worst, 1e-4)

    pc = CanonicalPotential.constant(0.3)
    t0 = locate_eigenvalues(pc, BoundaryParams(), SearchWindow(0, 0), g)
    d_p, _ = grad_potential(pc, BoundaryParams(), t0[0], g)
    yield at_most("constant-direction derivative of lam_0", abs(pairing(d_p, np.ones(g.n_points), g) + 1), 1e-6)


def suite_isospectral() -> Iterator[Check]:
    g = Grid(math.pi)
    bd = BoundaryParams()
    zero = CanonicalPotential.zero()
    for t in (math.log(2.0), -1.0):
        d = deform_single_detail(zero, bd, 0, t, g)
        p, q = d.potential.on_grid(g)
        gam = math.expm1(t)
        exact = gam / (math.pi + gam * g.nodes)
        yield at_most(f"closed-form deformation t={t:.4g}", max(np.max(np.abs(q - exact)), np.max(np.abs(p))), 1e-10)

    pot = bump_model()
    win = SearchWindow(-8, 8)
    before = locate_eigenvalues(pot, bd, win, g)
    d = deform_single_detail(pot, bd, 0, 1.0, g)
    after = locate_eigenvalues(d.potential, bd, win, g)
    yield at_most("deformation eigenvalue drift |n|<=8",
                  max(abs(after[n].lam - before[n].lam) for n in before.indices), 1e-7)
    ratio_err = max(abs(after[n].a / before[n].a - (math.exp(-1.0) if n == 0 else 1.0)) for n in before.indices)
    yield at_most("deformation norming ratios", ratio_err, 1e-6)
    yield at_most("deformation intertwining residual", intertwining_residual(d.w, d.potential, d.lam), 1e-6)
    th = d.theta.values
    yield at_most("deformation norm identity",
                  abs(d.w.norm_sq - (1 / th[0] - 1 / th[-1]) / math.expm1(1.0)), 1e-6)

    sched = DeformationSchedule({0: 0.4, 1: -0.3, -1: 0.6})
    stages = deform_sequence_detail(pot, bd, sched, g)
    win = SearchWindow(-4, 4)
    before = locate_eigenvalues(pot, bd, win, g)
    after = locate_eigenvalues(stages[-1].potential, bd, win, g)
    yield at_most("sequence eigenvalue drift",
                  max(abs(after[n].lam - before[n].lam) for n in before.indices), 1e-6)
    yield at_most("sequence norming ratios",
                  max(abs(after[n].a / before[n].a - math.exp(-sched.value(n))) for n in before.indices), 1e-5)


def suite_surgery() -> Iterator[Check]:
    ctx = WindowContext(40.0)
    s = add_eigenvalue_detail(CanonicalPotential.zero(40.0), 0.0, 1.0, 1.0, ctx)
    x = ctx.grid.nodes
    p, q = s.potential.on_grid(ctx.grid)
    err = max(np.max(np.abs(p + np.sin(2 * x) / (1 + x))), np.max(np.abs(q - np.cos(2 * x) / (1 + x))))
    yield at_most("add closed form", err, 1e-9)
    yield at_most("add ||w||^2 = 1 - 1/41", abs(s.w.norm_sq - 40.0 / 41.0), 1e-6)
    yield at_most("add intertwining residual", s.residual(), 1e-6)
    a, b = s.norm_identity()
    yield at_most("add norm identity", abs(a - b), 1e-6)

    ctx = WindowContext(12.0)
    pot = CanonicalPotential.linear(1.0, 12.0)
    table = window_spectrum(pot, 0.0, ctx, -1.5, 2.0)
    lam0 = table[0].lam
    h = window_eigenfunction(pot, 0.0, lam0, ctx)
    s = scale_norming_detail(pot, 0.0, lam0, 0.5, h, ctx)
    after = window_spectrum(s.potential, 0.0, ctx, -1.5, 2.0)
    yield at_most("scale eigenvalue drift", max(abs(after[n].lam - table[n].lam) for n in table.indices), 1e-8)
    yield at_most("scale norming ratio e^t", abs(after[0].a / table[0].a - math.exp(0.5)), 1e-6)
    yield at_most("scale intertwining residual", s.residual(), 1e-6)
    a, b = s.norm_identity()
    yield at_most("scale norm identity", abs(a - b), 1e-6)

    try:
        remove_eigenvalue_detail(pot, 0.0, lam0, h, ctx)
        fired = 0.0
    except SingularityError:
        fired = 1.0
    yield at_least("remove with window-normalized h is singular", fired, 1.0)

    mass = h.norm_accum
    sub = ctx.sub_window(float(ctx.grid.nodes[np.searchsorted(mass, 0.9)]))
    r = remove_eigenvalue_detail(pot, 0.0, lam0, truncate(h, sub.grid), sub)
    yield at_most("remove intertwining residual (sub-window)", r.residual(sub.theta_floor), 1e-6)
    a, b = r.norm_identity()
    yield at_most("remove norm identity", abs(a - b), 1e-6)

    plan = SurgeryPlan([SurgeryStep("add", 0.7, c=1.0), SurgeryStep("scale", 0.7, t=1.0)], 12.0)
    chain = compose_surgery_detail(pot, 0.0, plan, ctx)
    t1 = window_spectrum(chain.intermediates[0], 0.0, ctx, 0.6, 0.8)
    t2 = window_spectrum(chain.final, 0.0, ctx, 0.6, 0.8)
    n = next(k for k in t1.indices if abs(t1[k].lam - 0.7) < 1e-6)
    m = next(k for k in t2.indices if abs(t2[k].lam - 0.7) < 1e-6)
    yield at_most("plan add then scale: ratio e^t", abs(t2[m].a / t1[n].a - math.e), 1e-6)


SUITE_FUNCS: dict[str, Callable[[], Iterator[Check]]] = {
    "ode": suite_ode,
    "spectrum": suite_spectrum,
    "gradient": suite_gradient,
    "isospectral": suite_isospectral,
    "surgery": suite_surgery,
}


def run_suite(name: str) -> Iterator[Check]:
    names = SUITES if name == "all" else (name,)
    for n in names:
        yield from SUITE_FUNCS[n]()
