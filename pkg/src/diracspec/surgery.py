"""Spectral surgery on a finite window ``[0, X]`` standing in for the half-line.

Every transform has the same rank-one shape

    Omega_new = Omega + gamma / theta * (B h h^T - h h^T B),   theta = 1 + gamma int_0^x |h|^2

with ``gamma = 1`` to add a level at ``nu`` (``h`` any solution at ``nu`` satisfying the
left boundary condition), ``gamma = -1`` to remove the level of the normalized
eigenfunction ``h``, and ``gamma = e^-t - 1`` to rescale its norming constant. In each
case ``w = h / theta`` solves the new system at ``nu``.

All integrals are truncated to the window. Removal is only regular while ``theta``
stays above ``theta_floor``; a violation raises :class:`SingularityError` instead of
clamping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError, SingularityError
from .isospectral import ThetaFunction, intertwining_residual, rank_one_term, transformed_eigenfunction
from .model import (
    BoundaryParams,
    CanonicalPotential,
    Grid,
    SpectralDatum,
    SpectrumTable,
    SurgeryPlan,
    SurgeryStep,
    VectorSolution,
    potential_from_matrix_field,
    potential_matrix_field,
)
from .ode import integrate_left, integrate_right, matched_bracket
from .spectrum import enumerate_roots, roots_of


@dataclass(frozen=True, eq=False)
class WindowContext:
    window_end: float
    theta_floor: float = 1e-8
    grid: Grid | None = None
    beta: float = 0.0  # right boundary angle of the truncated eigenproblem

    def __post_init__(self):
        if not self.window_end > 0:
            raise DomainError("window_end must be positive")
        if not self.theta_floor > 0:
            raise DomainError("theta_floor must be positive")
        if self.grid is None:
            object.__setattr__(self, "grid", Grid.for_window(self.window_end))
        elif abs(self.grid.x_end - self.window_end) > 1e-12 * self.window_end:
            raise ShapeError("grid does not span the window")

    def sub_window(self, x_end: float) -> "WindowContext":
        """Context on the longest node-aligned prefix ``[0, x]`` with ``x <= x_end``."""
        k = int(np.searchsorted(self.grid.nodes, x_end * (1 + 1e-12), side="right"))
        if k < 5:
            raise DomainError(f"sub-window [0, {x_end}] too short")
        g = Grid(float(self.grid.nodes[k - 1]), k)
        return WindowContext(g.x_end, self.theta_floor, g, self.beta)


def truncate(sol: VectorSolution, grid: Grid) -> VectorSolution:
    """Restrict a solution to a node-aligned prefix grid."""
    k = grid.n_points
    if k > sol.grid.n_points or abs(sol.grid.nodes[k - 1] - grid.x_end) > 1e-9 * grid.x_end:
        raise ShapeError("target grid is not a prefix of the solution grid")
    return VectorSolution(grid, sol.y1[:k], sol.y2[:k], sol.norm_accum[:k], sol.lam)


def window_solution(pot: CanonicalPotential, alpha: float, nu: float, c: float,
                    ctx: WindowContext) -> VectorSolution:
    """``c * phi(., nu, alpha)`` on the window."""
    if not c > 0:
        raise DomainError("normalization constant c must be positive")
    return integrate_left(pot, alpha, nu, ctx.grid).scaled(c)


# truncated eigenproblem -------------------------------------------------------


def _match_node(pot, grid: Grid, lam_abs: float) -> int:
    """Last node still inside the oscillatory region ``p^2 + q^2 <= (|lam| + 1)^2``."""
    p, q = pot.on_grid(grid)
    inside = np.flatnonzero(p * p + q * q <= (lam_abs + 1.0) ** 2)
    if inside.size == 0:
        return 1
    return int(min(max(inside[-1], 1), grid.n_points - 1))


def window_roots(pot, alpha: float, ctx: WindowContext, lo: float, hi: float,
                 scan_step: float = 0.02, refine_tol: float = 1e-12) -> np.ndarray:
    k = _match_node(pot, ctx.grid, max(abs(lo), abs(hi)))
    f = lambda lam: _scalar(matched_bracket(pot, alpha, ctx.beta, lam, ctx.grid, k), lam)
    return roots_of(f, lo, hi, scan_step, refine_tol)


def _scalar(vals, lam):
    return float(vals[0]) if np.ndim(lam) == 0 else vals


def window_eigenfunction(pot, alpha: float, lam: float, ctx: WindowContext) -> VectorSolution:
    """Window-normalized eigenfunction at ``lam``, glued from both shooting directions."""
    g = ctx.grid
    k = _match_node(pot, g, abs(lam))
    left = integrate_left(pot, alpha, lam, g)
    right = integrate_right(pot, ctx.beta, lam, g)
    pl, pr = left.at(k), right.at(k)
    kappa = float(pl @ pr / (pr @ pr))
    y1 = np.concatenate([left.y1[: k + 1], kappa * right.y1[k + 1:]])
    y2 = np.concatenate([left.y2[: k + 1], kappa * right.y2[k + 1:]])
    acc = np.concatenate([left.norm_accum[: k + 1],
                          left.norm_accum[k] + kappa**2 * (right.norm_accum[k + 1:] - right.norm_accum[k])])
    phi = VectorSolution(g, y1, y2, acc, lam)
    return phi.scaled(1.0 / math.sqrt(phi.norm_sq))


def window_norming(pot, alpha: float, lam: float, ctx: WindowContext) -> float:
    """Window norming constant ``a = int_0^X |phi|^2`` with ``phi(0) = (sin alpha, -cos alpha)``."""
    h = window_eigenfunction(pot, alpha, lam, ctx)
    # |phi(0)|^2 = 1, so a = 1 / |h(0)|^2
    return 1.0 / (h.y1[0] ** 2 + h.y2[0] ** 2)


def window_spectrum(pot, alpha: float, ctx: WindowContext, lo: float, hi: float) -> SpectrumTable:
    """Eigenvalues in ``[lo, hi]`` of the truncated problem with window norming constants.

    Indices are relative to the root nearest zero found in the scan, so ``[lo, hi]``
    should straddle zero when the absolute numbering matters.
    """
    roots = window_roots(pot, alpha, ctx, lo, hi)
    data = {}
    for n, lam in enumerate_roots(roots).items():
        a = window_norming(pot, alpha, lam, ctx)
        data[n] = SpectralDatum(n, lam, a, a, math.nan, math.nan)
    return SpectrumTable(data, BoundaryParams(alpha, ctx.beta),
                         {"potential": pot.describe(), "window": ctx.window_end})


def nearest_level(pot, alpha: float, nu: float, ctx: WindowContext, half_width: float = 0.5) -> float:
    roots = window_roots(pot, alpha, ctx, nu - half_width, nu + half_width)
    if roots.size == 0:
        raise DomainError(f"no window eigenvalue within {half_width} of {nu}")
    return float(roots[np.argmin(np.abs(roots - nu))])


# transforms ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Surgery:
    potential: CanonicalPotential
    gamma: float
    nu: float
    h: VectorSolution
    theta: ThetaFunction

    @property
    def w(self) -> VectorSolution:
        return transformed_eigenfunction(self.h, self.theta)

    def regular_mask(self, floor: float) -> np.ndarray:
        return self.theta.values >= 10.0 * floor

    def residual(self, floor: float = 1e-8) -> float:
        return intertwining_residual(self.w, self.potential, self.nu, self.regular_mask(floor))

    def norm_identity(self) -> tuple[float, float]:
        """``(||w||^2, (1/theta(0) - 1/theta(X)) / gamma)``; equal for a correct transform."""
        th = self.theta.values
        return self.w.norm_sq, (1.0 / th[0] - 1.0 / th[-1]) / self.gamma


def apply_rank_one(pot: CanonicalPotential, h: VectorSolution, gamma: float, nu: float,
                   ctx: WindowContext) -> Surgery:
    if not h.grid.same_as(ctx.grid):
        raise ShapeError("solution grid does not match the window grid")
    th = 1.0 + gamma * h.norm_accum
    low = np.flatnonzero(th < ctx.theta_floor)
    if low.size:
        i = int(low[0])
        raise SingularityError(float(ctx.grid.nodes[i]), float(th[i]), ctx.theta_floor)
    field_ = potential_matrix_field(pot, ctx.grid) + rank_one_term(h, gamma, th)
    theta_fn = ThetaFunction(ctx.grid, th, gamma)
    return Surgery(potential_from_matrix_field(field_, ctx.grid), gamma, float(nu), h, theta_fn)


def add_eigenvalue_detail(pot, alpha: float, mu: float, c: float, ctx: WindowContext) -> Surgery:
    return apply_rank_one(pot, window_solution(pot, alpha, mu, c, ctx), 1.0, mu, ctx)


def add_eigenvalue(pot, alpha: float, mu: float, c: float, ctx: WindowContext) -> CanonicalPotential:
    return add_eigenvalue_detail(pot, alpha, mu, c, ctx).potential


def remove_eigenvalue_detail(pot, alpha: float, lambda0: float, h: VectorSolution,
                             ctx: WindowContext) -> Surgery:
    return apply_rank_one(pot, h, -1.0, lambda0, ctx)


def remove_eigenvalue(pot, alpha: float, lambda0: float, h: VectorSolution,
                      ctx: WindowContext) -> CanonicalPotential:
    return remove_eigenvalue_detail(pot, alpha, lambda0, h, ctx).potential


def scale_norming_detail(pot, alpha: float, lambda0: float, t: float, h: VectorSolution,
                         ctx: WindowContext) -> Surgery:
    return apply_rank_one(pot, h, math.expm1(-t), lambda0, ctx)


def scale_norming(pot, alpha: float, lambda0: float, t: float, h: VectorSolution,
                  ctx: WindowContext) -> CanonicalPotential:
    return scale_norming_detail(pot, alpha, lambda0, t, h, ctx).potential


@dataclass
class SurgeryChain:
    final: CanonicalPotential
    steps: list = field(default_factory=list)  # Surgery records, one per plan step

    @property
    def intermediates(self) -> list[CanonicalPotential]:
        return [s.potential for s in self.steps]


def step_solution(pot, alpha: float, step: SurgeryStep, ctx: WindowContext) -> tuple[float, VectorSolution]:
    """``(nu, h)`` for a plan step against the running potential."""
    if step.op == "add":
        return step.nu, window_solution(pot, alpha, step.nu, step.c, ctx)
    lam = nearest_level(pot, alpha, step.nu, ctx)
    return lam, window_eigenfunction(pot, alpha, lam, ctx)


def compose_surgery_detail(pot, alpha: float, plan: SurgeryPlan, ctx: WindowContext | None = None) -> SurgeryChain:
    ctx = ctx or WindowContext(plan.window_end)
    current = pot
    chain = SurgeryChain(pot)
    for k, step in enumerate(plan.steps, start=1):
        try:
            nu, h = step_solution(current, alpha, step, ctx)
            s = apply_rank_one(current, h, step.gamma, nu, ctx)
        except Exception as exc:
            exc.step = k
            exc.args = (f"surgery step {k} ({step.op} at {step.nu}): {exc}",) + exc.args[1:]
            raise
        chain.steps.append(s)
        current = s.potential
    chain.final = current
    return chain


def compose_surgery(pot, alpha: float, plan: SurgeryPlan, ctx: WindowContext | None = None):
    """``(final potential, [Omega_1, ..., Omega_K])``."""
    chain = compose_surgery_detail(pot, alpha, plan, ctx)
    return chain.final, chain.intermediates
