"""Eigenvalue gradients, their finite-difference oracle, and a gradient-descent fitter.

For a normalized eigenfunction ``h = (h1, h2)``:

    d lam / d alpha = -|h(0)|^2 = -1/a
    d lam / d beta  = |h(x_end)|^2 = 1/b
    d lam / d p(x)  = h1^2 - h2^2
    d lam / d q(x)  = 2 h1 h2

On a half-line window the beta component is absent and all integrals are truncated
to ``[0, x_end]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import DomainError, FitError, ShapeError, TrackingError
from .model import (
    BoundaryParams,
    CanonicalPotential,
    GradientBundle,
    Grid,
    Perturbation,
    SpectralDatum,
    check_angle,
)
from .spectrum import SearchWindow, locate_eigenvalues, normalized_eigenfunction


def grad_boundary(pot: CanonicalPotential, boundary: BoundaryParams, datum: SpectralDatum,
                  grid: Grid, half_line: bool = False) -> tuple[float, float | None]:
    d_alpha = -1.0 / datum.a
    return d_alpha, (None if half_line else 1.0 / datum.b)


def grad_potential(pot: CanonicalPotential, boundary: BoundaryParams, datum: SpectralDatum,
                   grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    h = normalized_eigenfunction(pot, boundary, datum, "left", grid)
    return h.y1**2 - h.y2**2, 2.0 * h.y1 * h.y2


def grad_matrix(d_p, d_q) -> np.ndarray:
    """Node-wise ``B * dlam/dOmega = [[d_q, -d_p], [-d_p, -d_q]]``."""
    d_p = np.asarray(d_p, dtype=float)
    d_q = np.asarray(d_q, dtype=float)
    if d_p.shape != d_q.shape:
        raise ShapeError(f"d_p {d_p.shape} and d_q {d_q.shape} differ")
    out = np.empty(d_p.shape + (2, 2))
    out[..., 0, 0] = d_q
    out[..., 0, 1] = -d_p
    out[..., 1, 0] = -d_p
    out[..., 1, 1] = -d_q
    return out


def gradient_bundle(pot, boundary, datum, grid, half_line: bool = False) -> GradientBundle:
    d_alpha, d_beta = grad_boundary(pot, boundary, datum, grid, half_line)
    d_p, d_q = grad_potential(pot, boundary, datum, grid)
    return GradientBundle(grid, d_alpha, d_beta, d_p, d_q, grad_matrix(d_p, d_q))


def pairing(d: np.ndarray, v: np.ndarray, grid: Grid) -> float:
    """``int d(x) v(x) dx`` by composite Simpson on the grid."""
    return float(simpson(np.asarray(d) * np.asarray(v), x=grid.nodes))


# finite-difference oracle ---------------------------------------------------


def perturbed(pot: CanonicalPotential, pert: Perturbation, grid: Grid, sign: float = 1.0):
    if pert.v.shape != (grid.n_points,):
        raise ShapeError("perturbation direction must live on the grid")
    p, q = pot.on_grid(grid)
    dv = sign * pert.eps * pert.v
    if pert.channel == "p":
        p = p + dv
    else:
        q = q + dv
    return CanonicalPotential.sampled(grid.nodes, p, q)


def eigenvalue_of(pot, boundary, n: int, grid: Grid) -> float:
    window = SearchWindow.around(min(n, 0), max(n, 0), boundary)
    return locate_eigenvalues(pot, boundary, window, grid, norming=False)[n].lam


def tracked_eigenvalue(pot, boundary, n: int, reference: float, grid: Grid, scan_step: float = 0.05) -> float:
    """Re-solve and return ``lam_n``, checking it is also the root nearest ``reference``."""
    window = SearchWindow.around(n - 1, n + 1, boundary, scan_step=scan_step)
    table = locate_eigenvalues(pot, boundary, window, grid, norming=False)
    lams = {k: d.lam for k, d in table.data.items()}
    nearest = min(lams, key=lambda k: abs(lams[k] - reference))
    if nearest != n:
        raise TrackingError(
            f"index drift: root nearest {reference:.10g} is lam_{nearest}={lams[nearest]:.10g}, "
            f"lam_{n}={lams[n]:.10g}"
        )
    return lams[n]


def directional_derivative_fd(pot: CanonicalPotential, boundary: BoundaryParams, n: int,
                              pert: Perturbation, grid: Grid, reference: float | None = None) -> float:
    """Central difference ``[lam_n(g + eps v) - lam_n(g - eps v)] / (2 eps)``."""
    if reference is None:
        reference = eigenvalue_of(pot, boundary, n, grid)
    plus = tracked_eigenvalue(perturbed(pot, pert, grid, +1.0), boundary, n, reference, grid)
    minus = tracked_eigenvalue(perturbed(pot, pert, grid, -1.0), boundary, n, reference, grid)
    return (plus - minus) / (2.0 * pert.eps)


def boundary_derivative_fd(pot, boundary: BoundaryParams, n: int, which: str, eps: float,
                           grid: Grid, reference: float | None = None) -> float:
    """Central difference of ``lam_n`` in ``alpha`` or ``beta``."""
    if which not in ("alpha", "beta"):
        raise DomainError("which must be 'alpha' or 'beta'")
    if reference is None:
        reference = eigenvalue_of(pot, boundary, n, grid)
    vals = []
    for s in (+1.0, -1.0):
        angle = check_angle(getattr(boundary, which) + s * eps, which)
        bd = BoundaryParams(**{**vars(boundary), which: angle})
        vals.append(tracked_eigenvalue(pot, bd, n, reference, grid))
    return (vals[0] - vals[1]) / (2.0 * eps)


# lcg directions ---------------------------------------------------------------

_LCG_A = 6364136223846793005
_LCG_C = 1442695040888963407
_MASK = (1 << 64) - 1


def lcg_stream(seed: int):
    """``x_{k+1} = (A x_k + C) mod 2^64``; yields ``x_{k+1} / 2^64 - 0.5``."""
    x = int(seed) & _MASK
    while True:
        x = (_LCG_A * x + _LCG_C) & _MASK
        yield x / 2.0**64 - 0.5


def trig_direction(grid: Grid, coeffs) -> np.ndarray:
    """``v(x) = sum_k c_k cos(k x) + s_k sin(k x)`` for ``coeffs = [(c_0, s_0), ...]``."""
    x = grid.nodes
    v = np.zeros_like(x)
    for k, (c, s) in enumerate(coeffs):
        v += c * np.cos(k * x) + s * np.sin(k * x)
    return v


def random_directions(grid: Grid, seed: int, count: int = 3, degree: int = 5) -> list[np.ndarray]:
    """Seeded trigonometric polynomials of the given degree (cos and sin terms per k)."""
    rng = lcg_stream(seed)
    out = []
    for _ in range(count):
        coeffs = [(next(rng), next(rng)) for _ in range(degree + 1)]
        out.append(trig_direction(grid, coeffs))
    return out


# fitting ------------------------------------------------------------------------


@dataclass
class FitProblem:
    target: list  # [(n, lam_target), ...]
    init: CanonicalPotential
    grid: Grid
    boundary: BoundaryParams = field(default_factory=BoundaryParams)
    learn_rate: float = 1.0
    max_iters: int = 200
    misfit_tol: float = 1e-24
    channel_mask: str = "p"
    min_rate: float = 1e-9

    def __post_init__(self):
        idx = [int(n) for n, _ in self.target]
        if len(set(idx)) != len(idx):
            raise DomainError("target indices must be distinct")
        if not self.learn_rate > 0:
            raise DomainError("learn_rate must be positive")
        if self.channel_mask not in ("p", "q", "both"):
            raise DomainError("channel_mask must be 'p', 'q' or 'both'")
        ordered = sorted((int(n), float(v)) for n, v in self.target)
        for (n0, v0), (n1, v1) in zip(ordered, ordered[1:]):
            if not v0 < v1:
                raise DomainError(f"targets not increasing between n={n0} and n={n1}")
        self.target = ordered


@dataclass
class FitResult:
    potential: CanonicalPotential
    history: list  # misfit per accepted iterate, history[0] is the initial misfit
    iterations: int
    learn_rate: float


def _spectrum_at(pot, problem: FitProblem):
    idx = [n for n, _ in problem.target]
    window = SearchWindow.around(min(idx), max(idx), problem.boundary)
    return locate_eigenvalues(pot, problem.boundary, window, problem.grid)


def _misfit(table, problem) -> float:
    return float(sum((table[n].lam - v) ** 2 for n, v in problem.target))


def fit_spectrum(problem: FitProblem) -> FitResult:
    """Plain gradient descent on ``sum_k (lam_{n_k} - target_k)^2`` with step halving."""
    grid, bd = problem.grid, problem.boundary
    pot = problem.init.restricted(grid)
    table = _spectrum_at(pot, problem)
    misfit = _misfit(table, problem)
    history = [misfit]
    rate = problem.learn_rate
    it = 0
    while it < problem.max_iters and misfit > problem.misfit_tol:
        p, q = pot.on_grid(grid)
        gp, gq = np.zeros_like(p), np.zeros_like(q)
        for n, v in problem.target:
            d_p, d_q = grad_potential(pot, bd, table[n], grid)
            w = 2.0 * (table[n].lam - v)
            gp += w * d_p
            gq += w * d_q
        if problem.channel_mask == "p":
            gq[:] = 0.0
        elif problem.channel_mask == "q":
            gp[:] = 0.0
        while True:
            trial = CanonicalPotential.sampled(grid.nodes, p - rate * gp, q - rate * gq)
            try:
                t_table = _spectrum_at(trial, problem)
                t_misfit = _misfit(t_table, problem)
            except Exception:  # enumeration failure counts as an increase
                t_misfit = math.inf
            if t_misfit <= misfit:
                break
            rate *= 0.5
            if rate < problem.min_rate:
                raise FitError(f"step rate fell below {problem.min_rate} at iteration {it}",
                               last_potential=pot, history=history)
        pot, table, misfit = trial, t_table, t_misfit
        history.append(misfit)
        it += 1
    return FitResult(pot, history, it, rate)
