"""Eigenvalues, norming constants and normalized eigenfunctions.

Eigenvalues are the zeros of the characteristic function ``chi``; they are located
by a uniform sign-change scan followed by bracketed refinement (Brent's
bisection/secant hybrid). Indices follow the usual convention: consecutive
eigenvalues increase and ``lam_0`` is the one nearest zero, the negative one on a tie.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, EnumerationError, PreconditionError, RootError
from .model import (
    TIE_TOL,
    BoundaryParams,
    CanonicalPotential,
    Grid,
    SpectralDatum,
    SpectrumTable,
    VectorSolution,
)
from .ode import characteristic, integrate_left, integrate_right

# gaps wider than this get a finer re-scan to look for missed root pairs
WIDE_GAP = 1.5
MAX_EXTENSIONS = 8


@dataclass(frozen=True)
class SearchWindow:
    n_min: int
    n_max: int
    guess_shift: float = 0.0
    scan_step: float = 0.05
    refine_tol: float = 1e-11

    def __post_init__(self):
        if self.n_max < self.n_min:
            raise DomainError(f"empty index range [{self.n_min}, {self.n_max}]")
        if not self.scan_step > 0:
            raise DomainError("scan_step must be positive")

    @classmethod
    def around(cls, n_min, n_max, boundary: BoundaryParams, **kw) -> "SearchWindow":
        return cls(n_min, n_max, boundary.shift, **kw)

    @property
    def scan_range(self) -> tuple[float, float]:
        lo = min(self.n_min, 0) + self.guess_shift - 1.0
        hi = max(self.n_max, 0) + self.guess_shift + 1.0
        return lo, hi


def _scan(chi, lo, hi, step):
    n = max(int(math.ceil((hi - lo) / step)), 1)
    xs = lo + step * np.arange(n + 1)
    return xs, chi(xs)


def _roots_from_scan(chi, xs, vals, tol):
    s = np.sign(vals)
    roots = [float(x) for x in xs[s == 0]]
    for i in np.flatnonzero(s[:-1] * s[1:] < 0):
        try:
            r = brentq(chi, xs[i], xs[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
        except (RuntimeError, ValueError) as exc:
            raise RootError(f"refinement failed in [{xs[i]}, {xs[i + 1]}]: {exc}") from exc
        roots.append(r)
    return sorted(roots)


def find_roots(pot, boundary: BoundaryParams, lo: float, hi: float, grid: Grid,
               scan_step: float = 0.05, refine_tol: float = 1e-11) -> np.ndarray:
    """All sign-change roots of chi in ``[lo, hi]``, sorted, with spacing checks."""
    chi = lambda lam: characteristic(pot, boundary.alpha, boundary.beta, lam, grid)
    return roots_of(chi, lo, hi, scan_step, refine_tol)


def roots_of(chi, lo: float, hi: float, scan_step: float = 0.05, refine_tol: float = 1e-11) -> np.ndarray:
    """Roots of a vectorised real function ``chi`` on ``[lo, hi]``."""
    xs, vals = _scan(chi, lo, hi, scan_step)
    scale = max(1.0, float(np.max(np.abs(vals))))
    roots = _roots_from_scan(chi, xs, vals, refine_tol)
    for r in roots:
        if abs(chi(r)) > 1e-9 * scale:
            raise RootError(f"root {r!r} has residual {chi(r):.3e} (scale {scale:.3e})")
    # a missed pair of close roots shows up as an unusually wide gap
    edges = [lo] + roots + [hi]
    for a, b in zip(edges, edges[1:]):
        if b - a > WIDE_GAP:
            fx, fv = _scan(chi, a, b, scan_step / 8)
            extra = [x for x in _roots_from_scan(chi, fx[1:-1], fv[1:-1], refine_tol)
                     if min(abs(x - a), abs(x - b)) > 10 * refine_tol]
            if extra:
                raise EnumerationError(
                    f"scan step {scan_step} missed roots {extra} between {a:.6f} and {b:.6f}"
                )
    return np.array(roots)


def zero_index(roots: np.ndarray) -> int:
    """Position of the root nearest zero; the negative one wins a tie."""
    mags = np.abs(roots)
    cand = np.flatnonzero(mags <= mags.min() + TIE_TOL)
    return int(cand[np.argmin(roots[cand])])


def enumerate_roots(roots: np.ndarray) -> dict[int, float]:
    if roots.size == 0:
        return {}
    i0 = zero_index(roots)
    return {i - i0: float(r) for i, r in enumerate(roots)}


def locate_eigenvalues(pot: CanonicalPotential, boundary: BoundaryParams, window: SearchWindow,
                       grid: Grid, norming: bool = True) -> SpectrumTable:
    """Eigenvalues ``n_min..n_max`` with norming constants and remainders."""
    lo, hi = window.scan_range
    # lam_0 must be decidable from the scan, so always look a little past zero
    lo, hi = min(lo, -1.5), max(hi, 1.5)
    for _ in range(MAX_EXTENSIONS):
        roots = find_roots(pot, boundary, lo, hi, grid, window.scan_step, window.refine_tol)
        indexed = enumerate_roots(roots)
        missing_lo = window.n_min not in indexed
        missing_hi = window.n_max not in indexed
        if not (missing_lo or missing_hi):
            break
        lo -= 2.0 if missing_lo else 0.0
        hi += 2.0 if missing_hi else 0.0
    else:
        raise EnumerationError(
            f"could not resolve indices [{window.n_min}, {window.n_max}]; "
            f"found {sorted(indexed.items())}"
        )
    shift = boundary.shift
    data = {}
    for n in range(window.n_min, window.n_max + 1):
        lam = indexed[n]
        if (n > 0 and lam <= 0) or (n < 0 and lam >= 0):
            warnings.warn(f"lam_{n}={lam:.6g} violates the sign convention", RuntimeWarning)
        a, b = norming_constants(pot, boundary, lam, grid, check=False) if norming else (math.pi,) * 2
        data[n] = SpectralDatum(n, lam, a, b, lam - (n + shift), a - math.pi)
    return SpectrumTable(data, boundary, {"potential": pot.describe(), "grid": grid.n_points})


def refine_near(pot: CanonicalPotential, boundary: BoundaryParams, seed: float, grid: Grid,
                half_width: float = 0.25, scan_step: float = 0.01, refine_tol: float = 1e-12) -> float:
    """The eigenvalue nearest ``seed``, searched in ``seed +/- half_width``."""
    roots = find_roots(pot, boundary, seed - half_width, seed + half_width, grid, scan_step, refine_tol)
    if roots.size == 0:
        raise RootError(f"no eigenvalue within {half_width} of {seed}")
    return float(roots[np.argmin(np.abs(roots - seed))])


def norming_constants(pot: CanonicalPotential, boundary: BoundaryParams, lam: float, grid: Grid,
                      tol: float = 1e-9, check: bool = True) -> tuple[float, float]:
    """Squared norms ``(a, b)`` of the left- and right-anchored eigenfunctions."""
    left = integrate_left(pot, boundary.alpha, lam, grid)
    if check:
        end = math.hypot(left.y1[-1], left.y2[-1])
        chi = left.y1[-1] * math.cos(boundary.beta) + left.y2[-1] * math.sin(boundary.beta)
        if abs(chi) > tol * max(1.0, end):
            raise PreconditionError(f"lam={lam!r} is not an eigenvalue (chi={chi:.3e})")
    right = integrate_right(pot, boundary.beta, lam, grid)
    return left.norm_sq, right.norm_sq


def normalized_eigenfunction(pot: CanonicalPotential, boundary: BoundaryParams, datum: SpectralDatum,
                             side: str, grid: Grid) -> VectorSolution:
    """``h = phi/sqrt(a)`` for ``side='left'``, ``h_hat = psi/sqrt(b)`` for ``side='right'``."""
    if side == "left":
        sol = integrate_left(pot, boundary.alpha, datum.lam, grid)
    elif side == "right":
        sol = integrate_right(pot, boundary.beta, datum.lam, grid)
    else:
        raise DomainError(f"side must be 'left' or 'right', not {side!r}")
    return sol.scaled(1.0 / math.sqrt(sol.norm_sq))


def eigenpair(pot, boundary, n, grid, window: SearchWindow | None = None):
    """Convenience: ``(datum, h_n)`` for a single index."""
    window = window or SearchWindow.around(min(n, 0), max(n, 0), boundary)
    table = locate_eigenvalues(pot, boundary, window, grid)
    datum = table[n]
    return datum, normalized_eigenfunction(pot, boundary, datum, "left", grid)


@dataclass
class RemainderReport:
    rows: list[tuple[int, float, float]]  # (n, r_n, c_n)
    tail: dict = field(default_factory=dict)

    def max_abs_r(self, lo: int, hi: int | None = None) -> float:
        """``max |r_n|`` over ``lo <= |n| <= hi``."""
        vals = [abs(r) for n, r, _ in self.rows if abs(n) >= lo and (hi is None or abs(n) <= hi)]
        if not vals:
            raise DomainError(f"no indices with |n| in [{lo}, {hi}]")
        return max(vals)

    def partial_c2(self) -> float:
        return sum(c * c for _, _, c in self.rows)

    def lines(self) -> list[str]:
        out = [f"{n:>5d}  r={r: .3e}  c={c: .3e}" for n, r, c in self.rows]
        out += [f"# {k}={v:.6e}" for k, v in self.tail.items()]
        return out


def asymptotic_remainders(table: SpectrumTable, n0: int | None = None) -> RemainderReport:
    if len(table) == 0:
        raise DomainError("empty spectrum table")
    rows = [(d.n, d.r, d.c) for d in table]
    rep = RemainderReport(rows)
    top = max(abs(n) for n, _, _ in rows)
    n0 = top // 2 if n0 is None else n0
    rep.tail = {f"max_abs_r_tail_{n0}": rep.max_abs_r(n0), "partial_sum_c2": rep.partial_c2()}
    return rep


def estimate_boundary_alpha(table: SpectrumTable, tail_from: int) -> float:
    """``pi * mean(n - lam_n)`` over ``|n| >= tail_from`` (right boundary angle 0)."""
    if table.boundary.beta != 0:
        raise PreconditionError("estimator assumes beta = 0")
    tail = [n - d.lam for n, d in table.data.items() if abs(n) >= tail_from]
    if not tail:
        raise DomainError(f"no indices with |n| >= {tail_from}")
    return math.pi * float(np.mean(tail))
