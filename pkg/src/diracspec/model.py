"""Domain types shared across the package: potentials, grids, solutions, spectra and plans.

The canonical Dirac system is ``B y' + Omega(x) y = lam y`` with
``B = [[0, 1], [-1, 0]]`` and ``Omega = [[p, q], [q, -p]]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, PreconditionError, ShapeError, StructureError

B = np.array([[0.0, 1.0], [-1.0, 0.0]])
E = np.eye(2)
# Note the labelling: sigma2 is the diagonal one, sigma3 the real off-diagonal one.
SIGMA1 = np.array([[0.0, 1.0j], [-1.0j, 0.0]])
SIGMA2 = np.array([[1.0, 0.0], [0.0, -1.0]])
SIGMA3 = np.array([[0.0, 1.0], [1.0, 0.0]])

STRUCTURE_TOL = 1e-10
TIE_TOL = 1e-12
DEFAULT_POINTS = 4001
MAX_HALF_LINE_SPACING = math.pi / 4000


def check_angle(value: float, name: str = "angle") -> float:
    value = float(value)
    if not (-math.pi / 2 < value <= math.pi / 2):
        raise DomainError(f"{name}={value!r} outside (-pi/2, pi/2]")
    return value


@dataclass(frozen=True)
class BoundaryParams:
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_angle(self.alpha, "alpha"))
        object.__setattr__(self, "beta", check_angle(self.beta, "beta"))

    @property
    def shift(self) -> float:
        """Free-case offset: eigenvalues of the zero potential are ``n + shift``."""
        return (self.beta - self.alpha) / math.pi


@dataclass(frozen=True, eq=False)
class Grid:
    x_end: float
    n_points: int = DEFAULT_POINTS

    def __post_init__(self):
        if not self.x_end > 0:
            raise DomainError("grid end must be positive")
        if self.n_points < 2:
            raise DomainError("grid needs at least two points")
        nodes = np.linspace(0.0, float(self.x_end), int(self.n_points))
        nodes.flags.writeable = False
        object.__setattr__(self, "_nodes", nodes)

    @classmethod
    def for_window(cls, x_end: float, max_spacing: float = MAX_HALF_LINE_SPACING) -> "Grid":
        return cls(x_end, int(math.ceil(x_end / max_spacing)) + 1)

    @property
    def x0(self) -> float:
        return 0.0

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def spacing(self) -> float:
        return self.x_end / (self.n_points - 1)

    def same_as(self, other: "Grid") -> bool:
        return self is other or (self.n_points == other.n_points and self.x_end == other.x_end)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.same_as(other)

    def __hash__(self):
        return hash((self.x_end, self.n_points))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


POTENTIAL_KINDS = ("zero", "constant", "fourier", "gauss-bumps", "sampled")


@dataclass(frozen=True, eq=False)
class CanonicalPotential:
    """Real potential ``Omega = [[p, q], [q, -p]]`` on ``[0, domain_end]``.

    Use the classmethod constructors rather than building one by hand. Sampled
    potentials use local cubic (four-point) interpolation and clamp at the ends; with
    only two samples this reduces to linear interpolation.
    """

    kind: str
    params: Mapping = field(default_factory=dict)
    samples: tuple | None = None
    domain_end: float = math.pi

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise DomainError(f"unknown potential kind {self.kind!r}")
        if not self.domain_end > 0:
            raise DomainError("domain_end must be positive")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        object.__setattr__(self, "_cache", {})
        if self.kind == "sampled":
            if self.samples is None:
                raise DomainError("sampled potential needs samples")
            x, p, q = (_frozen(s) for s in self.samples)
            if not (x.shape == p.shape == q.shape) or x.ndim != 1 or x.size < 2:
                raise ShapeError("samples must be three equal-length 1-d arrays")
            if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
                raise DomainError("sampled potential must be finite")
            object.__setattr__(self, "samples", (x, p, q))

    # constructors ----------------------------------------------------------

    @classmethod
    def zero(cls, domain_end: float = math.pi):
        return cls("zero", {}, None, domain_end)

    @classmethod
    def constant(cls, p0: float = 0.0, q0: float = 0.0, domain_end: float = math.pi):
        return cls("constant", {"p0": float(p0), "q0": float(q0)}, None, domain_end)

    @classmethod
    def fourier(cls, p_cos=(), p_sin=(), q_cos=(), q_sin=(), domain_end: float = math.pi):
        """``p(x) = sum_k p_cos[k] cos(kx) + sum_k p_sin[k-1] sin(kx)``, likewise for q."""
        params = {k: tuple(float(c) for c in v)
                  for k, v in dict(p_cos=p_cos, p_sin=p_sin, q_cos=q_cos, q_sin=q_sin).items()}
        return cls("fourier", params, None, domain_end)

    @classmethod
    def gauss_bumps(cls, bumps: Sequence[Sequence[float]], domain_end: float = math.pi):
        """Each bump is ``(center, width, amp_p, amp_q)``."""
        bumps = tuple(tuple(float(v) for v in b) for b in bumps)
        for b in bumps:
            if len(b) != 4 or b[1] <= 0:
                raise DomainError(f"bad bump {b!r}: need (center, width>0, amp_p, amp_q)")
        return cls("gauss-bumps", {"bumps": bumps}, None, domain_end)

    @classmethod
    def sampled(cls, x, p, q):
        x = np.asarray(x, dtype=float)
        return cls("sampled", {}, (x, p, q), float(x[-1]))

    @classmethod
    def linear(cls, slope: float = 1.0, domain_end: float = 12.0):
        """Confining model ``p(x) = slope * x, q = 0`` used for half-line windows."""
        g = Grid(domain_end, 3)
        return cls.sampled(g.nodes, slope * g.nodes, np.zeros(3))

    # evaluation ------------------------------------------------------------

    def evaluate(self, x):
        """Return ``(p(x), q(x))``; scalars for scalar input, arrays otherwise."""
        xa = np.asarray(x, dtype=float)
        slack = 1e-12 * self.domain_end
        if np.any(xa < -slack) or np.any(xa > self.domain_end + slack) or not np.all(np.isfinite(xa)):
            raise DomainError(f"x outside [0, {self.domain_end}]")
        p, q = self._eval(xa)
        if xa.ndim == 0:
            return float(p), float(q)
        return p, q

    def _eval(self, x: np.ndarray):
        zeros = np.zeros_like(x)
        kind, prm = self.kind, self.params
        if kind == "zero":
            return zeros, zeros.copy()
        if kind == "constant":
            return zeros + prm["p0"], zeros + prm["q0"]
        if kind == "fourier":
            p, q = zeros.copy(), zeros.copy()
            for k, c in enumerate(prm.get("p_cos", ())):
                p += c * np.cos(k * x)
            for k, c in enumerate(prm.get("p_sin", ()), start=1):
                p += c * np.sin(k * x)
            for k, c in enumerate(prm.get("q_cos", ())):
                q += c * np.cos(k * x)
            for k, c in enumerate(prm.get("q_sin", ()), start=1):
                q += c * np.sin(k * x)
            return p, q
        if kind == "gauss-bumps":
            p, q = zeros.copy(), zeros.copy()
            for c, w, ap, aq in prm["bumps"]:
                g = np.exp(-0.5 * ((x - c) / w) ** 2)
                p += ap * g
                q += aq * g
            return p, q
        xs, ps, qs = self.samples
        return interpolate(xs, ps, x), interpolate(xs, qs, x)

    def matrix(self, x) -> np.ndarray:
        p, q = self.evaluate(x)
        return assemble_matrix(p, q)

    def on_grid(self, grid: Grid):
        """``(p, q)`` at the grid nodes, cached per grid."""
        key = ("nodes", grid.x_end, grid.n_points)
        if key not in self._cache:
            self._cache[key] = tuple(_frozen(a) for a in self.evaluate(grid.nodes))
        return self._cache[key]

    def describe(self) -> dict:
        d = {"kind": self.kind, "domain_end": self.domain_end}
        d.update({k: v for k, v in self.params.items()})
        if self.kind == "sampled":
            d["n_samples"] = int(self.samples[0].size)
        return d

    def restricted(self, grid: Grid) -> "CanonicalPotential":
        """Sampled copy of this potential on ``grid``."""
        p, q = self.on_grid(grid)
        return CanonicalPotential.sampled(grid.nodes, p, q)


def interpolate(xs: np.ndarray, ys: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Local four-point Lagrange interpolation, clamped at the ends.

    Exact at the nodes; falls back to lower order when fewer than four samples exist.
    """
    n = xs.size
    x = np.clip(x, xs[0], xs[-1])
    k = min(n, 4)
    if k == 2:
        return np.interp(x, xs, ys)
    j = np.clip(np.searchsorted(xs, x, side="right") - 1 - (k // 2 - 1), 0, n - k)
    nodes = np.stack([xs[j + i] for i in range(k)])
    vals = np.stack([ys[j + i] for i in range(k)])
    out = np.zeros_like(x)
    for i in range(k):
        w = np.ones_like(x)
        for l in range(k):
            if l != i:
                w = w * (x - nodes[l]) / (nodes[i] - nodes[l])
        out = out + w * vals[i]
    return out


def assemble_matrix(p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.empty(p.shape + (2, 2))
    out[..., 0, 0] = p
    out[..., 0, 1] = q
    out[..., 1, 0] = q
    out[..., 1, 1] = -p
    return out


def potential_matrix_field(pot: CanonicalPotential, grid: Grid) -> np.ndarray:
    p, q = pot.on_grid(grid)
    return assemble_matrix(p, q)


def check_canonical(field_: np.ndarray, tol: float = STRUCTURE_TOL) -> None:
    field_ = np.asarray(field_, dtype=float)
    if field_.shape[-2:] != (2, 2):
        raise ShapeError("matrix field must have trailing shape (2, 2)")
    asym = np.abs(field_[..., 0, 1] - field_[..., 1, 0])
    trace = np.abs(field_[..., 0, 0] + field_[..., 1, 1])
    bad = np.flatnonzero((asym > tol) | (trace > tol) | ~np.isfinite(field_).all(axis=(-2, -1)))
    if bad.size:
        i = int(bad[0])
        raise StructureError(
            f"matrix at node {i} not symmetric/trace-free "
            f"(asym={asym.flat[i]:.3e}, trace={trace.flat[i]:.3e})"
        )


def potential_from_matrix_field(field_: np.ndarray, grid: Grid) -> CanonicalPotential:
    field_ = np.asarray(field_, dtype=float)
    if field_.shape != (grid.n_points, 2, 2):
        raise ShapeError(f"field shape {field_.shape} does not match grid of {grid.n_points} nodes")
    check_canonical(field_)
    return CanonicalPotential.sampled(grid.nodes, field_[:, 0, 0], field_[:, 0, 1])


@dataclass(frozen=True, eq=False)
class VectorSolution:
    """Two-component trajectory on a grid with its running ``int_0^x |y|^2`` accumulator."""

    grid: Grid
    y1: np.ndarray
    y2: np.ndarray
    norm_accum: np.ndarray
    lam: float

    def __post_init__(self):
        for name in ("y1", "y2", "norm_accum"):
            a = _frozen(getattr(self, name))
            if a.shape != (self.grid.n_points,):
                raise ShapeError(f"{name} has shape {a.shape}, grid has {self.grid.n_points} nodes")
            object.__setattr__(self, name, a)

    @property
    def norm_sq(self) -> float:
        return float(self.norm_accum[-1])

    @property
    def density(self) -> np.ndarray:
        return self.y1**2 + self.y2**2

    def scaled(self, c: float) -> "VectorSolution":
        return VectorSolution(self.grid, c * self.y1, c * self.y2, c * c * self.norm_accum, self.lam)

    def at(self, i: int) -> np.ndarray:
        return np.array([self.y1[i], self.y2[i]])


@dataclass(frozen=True)
class SpectralDatum:
    n: int
    lam: float
    a: float
    b: float
    r: float
    c: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise PreconditionError(f"norming constants must be positive (n={self.n})")


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    data: Mapping[int, SpectralDatum]
    boundary: BoundaryParams
    provenance: Mapping = field(default_factory=dict)

    def __post_init__(self):
        data = dict(sorted((int(k), v) for k, v in self.data.items()))
        keys = list(data)
        for k0, k1 in zip(keys, keys[1:]):
            if k1 == k0 + 1 and not data[k0].lam < data[k1].lam:
                raise StructureError(f"eigenvalues not increasing at n={k0}")
        object.__setattr__(self, "data", MappingProxyType(data))
        object.__setattr__(self, "provenance", MappingProxyType(dict(self.provenance)))

    def __getitem__(self, n: int) -> SpectralDatum:
        return self.data[n]

    def __contains__(self, n) -> bool:
        return n in self.data

    def __iter__(self):
        return iter(self.data.values())

    def __len__(self) -> int:
        return len(self.data)

    @property
    def indices(self) -> list[int]:
        return list(self.data)

    def eigenvalues(self) -> np.ndarray:
        return np.array([d.lam for d in self.data.values()])

    def nearest(self, lam: float) -> SpectralDatum:
        return min(self.data.values(), key=lambda d: abs(d.lam - lam))


@dataclass(frozen=True, eq=False)
class GradientBundle:
    grid: Grid
    d_alpha: float
    d_beta: float | None
    d_p: np.ndarray
    d_q: np.ndarray
    matrix_field: np.ndarray


def stage_target(m: int) -> int:
    """Index touched at stage ``m``: 0, 1, -1, 2, -2, ..."""
    if m < 0:
        raise DomainError("stages start at 0")
    return (m + 1) // 2 if m % 2 else -(m // 2)


def stage_of(n: int) -> int:
    """Inverse of :func:`stage_target`."""
    return 2 * n - 1 if n > 0 else -2 * n


@dataclass(frozen=True)
class DeformationSchedule:
    t: Mapping[int, float] = field(default_factory=dict)
    max_stage: int | None = None

    def __post_init__(self):
        t = {int(k): float(v) for k, v in dict(self.t).items()}
        if not all(math.isfinite(v) for v in t.values()):
            raise DomainError("schedule values must be finite")
        object.__setattr__(self, "t", MappingProxyType(t))
        if self.max_stage is None:
            active = [stage_of(n) for n, v in t.items()]
            object.__setattr__(self, "max_stage", max(active, default=-1))

    def value(self, n: int) -> float:
        return self.t.get(n, 0.0)

    def l2_norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.t.values()))


SURGERY_OPS = ("add", "remove", "scale")


@dataclass(frozen=True)
class SurgeryStep:
    op: str
    nu: float
    t: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if self.op not in SURGERY_OPS:
            raise DomainError(f"unknown surgery op {self.op!r}")
        if self.op == "add" and not self.c > 0:
            raise DomainError("normalization constant c must be positive")

    @property
    def gamma(self) -> float:
        if self.op == "add":
            return 1.0
        if self.op == "remove":
            return -1.0
        return math.expm1(-self.t)


@dataclass(frozen=True)
class SurgeryPlan:
    steps: tuple = ()
    window_end: float = 12.0

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if not self.window_end > 0:
            raise DomainError("window_end must be positive")


@dataclass(frozen=True, eq=False)
class Perturbation:
    v: np.ndarray
    eps: float
    channel: str = "p"

    def __post_init__(self):
        v = _frozen(self.v)
        if not np.all(np.isfinite(v)):
            raise DomainError("perturbation direction must be finite")
        if not self.eps > 0:
            raise DomainError("eps must be positive")
        if self.channel not in ("p", "q"):
            raise DomainError("channel must be 'p' or 'q'")
        object.__setattr__(self, "v", v)
