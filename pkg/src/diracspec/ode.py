"""Fixed-step integration of the canonical Dirac system.

The system ``B y' + Omega y = lam y`` is advanced as ``y' = A(x) y`` with
``A = -B (lam - Omega) = [[q, -(lam + p)], [lam - p, -q]]``. Each step applies the
exponential of the fourth-order two-point Gauss-Legendre Magnus expansion. The
running norm ``int |y|^2`` rides along the same step using the endpoint-corrected
(Hermite) trapezoid rule, which is also fourth order and needs only node values.

Because ``A`` is trace-free the step exponential has a closed form, and for constant
potentials the scheme is exact up to rounding.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .errors import IntegrationOverflow
from .model import BoundaryParams, CanonicalPotential, Grid, VectorSolution

_G = math.sqrt(3.0) / 6.0
_C = math.sqrt(3.0) / 12.0


@numba.njit(cache=True)
def _step(p1, q1, p2, q2, h, lam, y1, y2):
    # A at the two Gauss points
    a11, a12, a21 = q1, -(lam + p1), lam - p1
    b11, b12, b21 = q2, -(lam + p2), lam - p2
    # commutator [A2, A1] of trace-free matrices (also trace-free)
    c11 = b12 * a21 - a12 * b21
    c12 = 2.0 * (b11 * a12 - a11 * b12)
    c21 = 2.0 * (b21 * a11 - a21 * b11)
    hh = h * h * _C
    m11 = 0.5 * h * (a11 + b11) + hh * c11
    m12 = 0.5 * h * (a12 + b12) + hh * c12
    m21 = 0.5 * h * (a21 + b21) + hh * c21
    d = m11 * m11 + m12 * m21
    if d < 0.0:
        w = math.sqrt(-d)
        c = math.cos(w)
        s = math.sin(w) / w if w > 1e-4 else 1.0 - w * w / 6.0 + w**4 / 120.0
    else:
        w = math.sqrt(d)
        c = math.cosh(w)
        s = math.sinh(w) / w if w > 1e-4 else 1.0 + w * w / 6.0 + w**4 / 120.0
    n1 = (c + s * m11) * y1 + s * m12 * y2
    n2 = s * m21 * y1 + (c - s * m11) * y2
    return n1, n2


@numba.njit(cache=True)
def _dnorm(p, q, y1, y2):
    # d/dx |y|^2 = 2 y^T A y
    return 2.0 * (q * (y1 * y1 - y2 * y2) - 2.0 * p * y1 * y2)


@numba.njit(cache=True)
def _sweep(pn, qn, pg1, qg1, pg2, qg2, h, lam, y1, y2, out1, out2, acc):
    n = pn.shape[0]
    out1[0] = y1
    out2[0] = y2
    acc[0] = 0.0
    f0 = y1 * y1 + y2 * y2
    d0 = _dnorm(pn[0], qn[0], y1, y2)
    hc = h * h / 12.0
    for i in range(n - 1):
        y1, y2 = _step(pg1[i], qg1[i], pg2[i], qg2[i], h, lam, y1, y2)
        if not (math.isfinite(y1) and math.isfinite(y2)):
            return i + 1
        f1 = y1 * y1 + y2 * y2
        d1 = _dnorm(pn[i + 1], qn[i + 1], y1, y2)
        acc[i + 1] = acc[i] + 0.5 * h * (f0 + f1) + hc * (d0 - d1)
        out1[i + 1] = y1
        out2[i + 1] = y2
        f0, d0 = f1, d1
    return -1


@numba.njit(cache=True)
def _endpoints(pg1, qg1, pg2, qg2, h, lams, y1_0, y2_0, out1, out2):
    m = pg1.shape[0]
    for k in range(lams.shape[0]):
        lam = lams[k]
        y1, y2 = y1_0, y2_0
        for i in range(m):
            y1, y2 = _step(pg1[i], qg1[i], pg2[i], qg2[i], h, lam, y1, y2)
        out1[k] = y1
        out2[k] = y2


def _gauss_samples(pot: CanonicalPotential, grid: Grid):
    key = ("gauss", grid.x_end, grid.n_points)
    cache = pot._cache
    if key not in cache:
        x, h = grid.nodes[:-1], grid.spacing
        p1, q1 = pot.evaluate(x + (0.5 - _G) * h)
        p2, q2 = pot.evaluate(np.minimum(x + (0.5 + _G) * h, grid.x_end))
        cache[key] = (p1, q1, p2, q2)
    return cache[key]


def _oriented(pot, grid, reverse):
    pn, qn = pot.on_grid(grid)
    p1, q1, p2, q2 = _gauss_samples(pot, grid)
    if not reverse:
        return pn, qn, p1, q1, p2, q2, grid.spacing
    # stepping right-to-left visits the second Gauss point of each cell first
    return (pn[::-1].copy(), qn[::-1].copy(), p2[::-1].copy(), q2[::-1].copy(),
            p1[::-1].copy(), q1[::-1].copy(), -grid.spacing)


def _integrate(pot, grid, lam, y0, reverse):
    pn, qn, p1, q1, p2, q2, h = _oriented(pot, grid, reverse)
    n = grid.n_points
    y1, y2, acc = np.empty(n), np.empty(n), np.empty(n)
    bad = _sweep(pn, qn, p1, q1, p2, q2, h, float(lam), float(y0[0]), float(y0[1]), y1, y2, acc)
    if bad >= 0:
        idx = n - 1 - bad if reverse else bad
        raise IntegrationOverflow(float(grid.nodes[idx]))
    if reverse:
        y1, y2, acc = y1[::-1], y2[::-1], acc[::-1]
        acc = acc - acc[0]
    return VectorSolution(grid, y1, y2, acc, float(lam))


def left_initial(alpha: float) -> tuple[float, float]:
    return math.sin(alpha), -math.cos(alpha)


def integrate_left(pot: CanonicalPotential, alpha: float, lam: float, grid: Grid) -> VectorSolution:
    """Solution phi with ``phi(0) = (sin alpha, -cos alpha)``."""
    return _integrate(pot, grid, lam, left_initial(alpha), reverse=False)


def integrate_right(pot: CanonicalPotential, beta: float, lam: float, grid: Grid) -> VectorSolution:
    """Solution psi with ``psi(x_end) = (sin beta, -cos beta)``.

    Integration runs from ``x_end`` down to 0; ``norm_accum`` is re-based so that it
    is measured from 0 upward, like the left solution's.
    """
    return _integrate(pot, grid, lam, left_initial(beta), reverse=True)


def endpoint_values(pot: CanonicalPotential, alpha: float, lams, grid: Grid):
    """``phi(x_end, lam)`` for an array of ``lam`` without storing trajectories."""
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    _, _, p1, q1, p2, q2, h = _oriented(pot, grid, False)
    out1, out2 = np.empty(lams.size), np.empty(lams.size)
    y0 = left_initial(alpha)
    _endpoints(p1, q1, p2, q2, h, lams, y0[0], y0[1], out1, out2)
    return out1, out2


def characteristic(pot: CanonicalPotential, alpha: float, beta: float, lam, grid: Grid):
    """``chi(lam) = phi_1(x_end) cos(beta) + phi_2(x_end) sin(beta)``; vectorised over ``lam``."""
    y1, y2 = endpoint_values(pot, alpha, lam, grid)
    bad = ~(np.isfinite(y1) & np.isfinite(y2))
    if bad.any():
        # re-run the first offender with trajectory storage to locate the overflow
        integrate_left(pot, alpha, float(np.atleast_1d(lam)[np.argmax(bad)]), grid)
    chi = y1 * math.cos(beta) + y2 * math.sin(beta)
    return float(chi[0]) if np.ndim(lam) == 0 else chi


def characteristic_for(pot: CanonicalPotential, boundary: BoundaryParams, grid: Grid):
    """Scalar callable ``lam -> chi(lam)`` bound to a problem."""
    return lambda lam: characteristic(pot, boundary.alpha, boundary.beta, lam, grid)


def bracket(sol_a: VectorSolution, sol_b: VectorSolution) -> np.ndarray:
    """Lagrange bracket ``a1 b2 - a2 b1`` at every node (x-independent at equal lam)."""
    return sol_a.y1 * sol_b.y2 - sol_a.y2 * sol_b.y1


def matched_bracket(pot: CanonicalPotential, alpha: float, beta: float, lams, grid: Grid, k: int):
    """``phi_1 psi_2 - phi_2 psi_1`` at node ``k``, phi shot from 0 and psi from ``x_end``.

    Each solution is only integrated in its stable direction, which keeps the bracket
    well conditioned for confining potentials where one-sided shooting blows up.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    _, _, p1, q1, p2, q2, h = _oriented(pot, grid, False)
    k = int(min(max(k, 0), grid.n_points - 1))
    l1, l2 = np.empty(lams.size), np.empty(lams.size)
    r1, r2 = np.empty(lams.size), np.empty(lams.size)
    a0, b0 = left_initial(alpha), left_initial(beta)
    _endpoints(p1[:k].copy(), q1[:k].copy(), p2[:k].copy(), q2[:k].copy(), h, lams, a0[0], a0[1], l1, l2)
    _endpoints(p2[k:][::-1].copy(), q2[k:][::-1].copy(), p1[k:][::-1].copy(), q1[k:][::-1].copy(),
               -h, lams, b0[0], b0[1], r1, r2)
    return l1 * r2 - l2 * r1
