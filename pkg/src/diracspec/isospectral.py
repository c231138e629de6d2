"""Isospectral deformations of the finite-interval problem (right boundary angle 0).

A single deformation with parameter ``t`` at index ``m`` adds the rank-one term

    (e^t - 1) / theta(x) * (B h h^T - h h^T B),   theta = 1 + (e^t - 1) int_0^x |h_m|^2

which keeps every eigenvalue and multiplies the norming constant ``a_m`` by ``e^-t``.
``B h h^T - h h^T B`` equals the gradient matrix ``B dlam_m/dOmega``, so the term is
built from :func:`gradient.grad_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import DiracError, PreconditionError, ShapeError
from .gradient import grad_matrix
from .model import (
    BoundaryParams,
    CanonicalPotential,
    DeformationSchedule,
    Grid,
    VectorSolution,
    potential_from_matrix_field,
    potential_matrix_field,
    stage_target,
)
from .spectrum import SearchWindow, locate_eigenvalues, normalized_eigenfunction, refine_near
from .ode import integrate_left

NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ThetaFunction:
    grid: Grid
    values: np.ndarray
    t: float
    m: int | None = None


def theta(h_m: VectorSolution, t: float, m: int | None = None, check_norm: bool = True) -> ThetaFunction:
    """``1 + (e^t - 1) * int_0^x |h_m|^2``."""
    if check_norm and abs(h_m.norm_sq - 1.0) > NORM_TOL:
        raise PreconditionError(f"eigenfunction not normalized (norm^2={h_m.norm_sq!r})")
    return ThetaFunction(h_m.grid, 1.0 + math.expm1(t) * h_m.norm_accum, float(t), m)


def rank_one_term(h: VectorSolution, gamma: float, theta_values: np.ndarray) -> np.ndarray:
    """``gamma/theta * (B h h^T - h h^T B)`` at every node."""
    d_p = h.y1**2 - h.y2**2
    d_q = 2.0 * h.y1 * h.y2
    return (gamma / theta_values)[:, None, None] * grad_matrix(d_p, d_q)


def transformed_eigenfunction(h_m: VectorSolution, th: ThetaFunction) -> VectorSolution:
    """``w = h_m / theta`` with its own running norm (cumulative Simpson)."""
    if not h_m.grid.same_as(th.grid):
        raise ShapeError("eigenfunction and theta live on different grids")
    w1 = h_m.y1 / th.values
    w2 = h_m.y2 / th.values
    acc = cumulative_simpson(w1**2 + w2**2, x=h_m.grid.nodes, initial=0.0)
    return VectorSolution(h_m.grid, w1, w2, acc, h_m.lam)


def intertwining_residual(w: VectorSolution, pot: CanonicalPotential, lam: float | None = None,
                          mask: np.ndarray | None = None) -> float:
    """``max |B w' + Omega w - lam w|`` over interior nodes (4th-order central differences).

    ``mask`` optionally restricts which nodes count.
    """
    lam = w.lam if lam is None else lam
    g = w.grid
    p, q = pot.on_grid(g)
    h = g.spacing

    def deriv(y):
        return (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * h)

    d1, d2 = deriv(w.y1), deriv(w.y2)
    y1, y2 = w.y1[2:-2], w.y2[2:-2]
    pi, qi = p[2:-2], q[2:-2]
    # B w' = (w2', -w1')
    r1 = d2 + pi * y1 + qi * y2 - lam * y1
    r2 = -d1 + qi * y1 - pi * y2 - lam * y2
    res = np.hypot(r1, r2)
    if mask is not None:
        res = res[np.asarray(mask)[2:-2]]
    return float(res.max()) if res.size else 0.0


@dataclass(frozen=True, eq=False)
class Deformation:
    """A deformed potential together with the data that produced it."""

    potential: CanonicalPotential
    m: int
    t: float
    lam: float
    h: VectorSolution
    theta: ThetaFunction

    @property
    def w(self) -> VectorSolution:
        return transformed_eigenfunction(self.h, self.theta)


def _require_beta_zero(boundary: BoundaryParams):
    if boundary.beta != 0.0:
        raise PreconditionError(
            "isospectral deformations are defined for right boundary angle beta = 0 "
            f"(got beta={boundary.beta!r})"
        )


def deform_single_detail(pot: CanonicalPotential, boundary: BoundaryParams, m: int, t: float,
                         grid: Grid, lam: float | None = None) -> Deformation:
    """Deformation at index ``m``; if ``lam`` is given it seeds a targeted refinement."""
    _require_beta_zero(boundary)
    if lam is None:
        table = locate_eigenvalues(pot, boundary, SearchWindow.around(min(m, 0), max(m, 0), boundary),
                                   grid, norming=False)
        lam = table[m].lam
    else:
        lam = refine_near(pot, boundary, lam, grid)
    sol = integrate_left(pot, boundary.alpha, lam, grid)
    h = sol.scaled(1.0 / math.sqrt(sol.norm_sq))
    th = theta(h, t, m)
    field = potential_matrix_field(pot, grid) + rank_one_term(h, math.expm1(t), th.values)
    return Deformation(potential_from_matrix_field(field, grid), m, float(t), lam, h, th)


def deform_single(pot: CanonicalPotential, boundary: BoundaryParams, m: int, t: float,
                  grid: Grid) -> CanonicalPotential:
    return deform_single_detail(pot, boundary, m, t, grid).potential


def schedule(sched: DeformationSchedule) -> list[tuple[int, int, float]]:
    """``(stage, target index, t)`` for stages ``0..max_stage``; zero-t stages are kept."""
    return [(m, stage_target(m), sched.value(stage_target(m))) for m in range(sched.max_stage + 1)]


def deform_sequence_detail(pot: CanonicalPotential, boundary: BoundaryParams, sched: DeformationSchedule,
                           grid: Grid) -> list[Deformation]:
    """Apply the stages in order, each using the eigenfunction of the current potential."""
    _require_beta_zero(boundary)
    stages = [(m, n, t) for m, n, t in schedule(sched) if t != 0.0]
    out: list[Deformation] = []
    seeds: dict[int, float] = {}
    if len(stages) > 1:
        idx = [n for _, n, _ in stages]
        table = locate_eigenvalues(pot, boundary, SearchWindow.around(min(idx), max(idx), boundary),
                                   grid, norming=False)
        seeds = {n: table[n].lam for n in idx}
    current = pot
    for k, (m, n, t) in enumerate(stages):
        try:
            d = deform_single_detail(current, boundary, n, t, grid, lam=seeds.get(n) if k else None)
        except DiracError as exc:
            exc.stage = m
            exc.args = (f"stage {m} (index {n}): {exc}",) + exc.args[1:]
            raise
        out.append(d)
        current = d.potential
    return out


def deform_sequence(pot: CanonicalPotential, boundary: BoundaryParams, sched: DeformationSchedule,
                    grid: Grid) -> CanonicalPotential:
    stages = deform_sequence_detail(pot, boundary, sched, grid)
    if not stages:
        return pot.restricted(grid)
    return stages[-1].potential
