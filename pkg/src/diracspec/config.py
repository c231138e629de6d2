"""Run configuration (flat ``key = value`` files with dotted keys) and CSV helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError
from .model import BoundaryParams, CanonicalPotential, Grid, check_angle

MODES = ("finite", "half-line-window")


class ConfigError(DomainError):
    pass


def parse_kv(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key] = value
    return out


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


@dataclass
class RunConfig:
    alpha: float = 0.0
    beta: float = 0.0
    potential: dict = field(default_factory=lambda: {"kind": "zero"})
    n_points: int | None = None
    x_end: float | None = None
    scan_step: float = 0.05
    refine_tol: float = 1e-11
    mode: str = "finite"
    theta_floor: float = 1e-8
    n_min: int = -20
    n_max: int = 20
    base_dir: Path = field(default_factory=Path.cwd)

    def __post_init__(self):
        check_angle(self.alpha, "boundary.alpha")
        check_angle(self.beta, "boundary.beta")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, not {self.mode!r}")
        if not (0 < self.scan_step <= 0.25):
            raise ConfigError("solver.scan_step must lie in (0, 0.25]")
        if not (0 < self.refine_tol < 1e-3):
            raise ConfigError("solver.refine_tol must lie in (0, 1e-3)")
        if self.n_points is not None and self.n_points < 5:
            raise ConfigError("grid.n_points must be at least 5")
        if self.x_end is not None and not self.x_end > 0:
            raise ConfigError("grid.x_end must be positive")
        if self.n_max < self.n_min:
            raise ConfigError("solver.n_max < solver.n_min")

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        return cls.from_mapping(parse_kv(path.read_text(), str(path)), path.parent)

    @classmethod
    def from_mapping(cls, kv: dict, base_dir: Path | None = None) -> "RunConfig":
        kv = dict(kv)
        known = {}
        try:
            for key, name, conv in [
                ("boundary.alpha", "alpha", float),
                ("boundary.beta", "beta", float),
                ("grid.n_points", "n_points", int),
                ("grid.x_end", "x_end", float),
                ("solver.scan_step", "scan_step", float),
                ("solver.refine_tol", "refine_tol", float),
                ("solver.n_min", "n_min", int),
                ("solver.n_max", "n_max", int),
                ("surgery.theta_floor", "theta_floor", float),
                ("mode", "mode", str),
            ]:
                if key in kv:
                    known[name] = conv(kv.pop(key))
        except ValueError as exc:
            raise ConfigError(f"bad numeric value: {exc}") from exc
        pot = {k.split(".", 1)[1]: v for k, v in kv.items() if k.startswith("potential.")}
        extra = [k for k in kv if not k.startswith("potential.")]
        if extra:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(extra))}")
        pot.setdefault("kind", "zero")
        return cls(potential=pot, base_dir=base_dir or Path.cwd(), **known)

    # derived objects ------------------------------------------------------------

    @property
    def boundary(self) -> BoundaryParams:
        return BoundaryParams(self.alpha, self.beta)

    @property
    def domain_end(self) -> float:
        if self.x_end is not None:
            return self.x_end
        return math.pi if self.mode == "finite" else 12.0

    def grid(self, x_end: float | None = None) -> Grid:
        x_end = self.domain_end if x_end is None else x_end
        if self.mode == "half-line-window" and self.n_points is None:
            return Grid.for_window(x_end)
        return Grid(x_end, self.n_points or 4001)

    def build_potential(self) -> CanonicalPotential:
        spec = dict(self.potential)
        kind = spec.pop("kind")
        X = self.domain_end
        try:
            if kind == "zero":
                return CanonicalPotential.zero(X)
            if kind == "constant":
                return CanonicalPotential.constant(float(spec.get("p0", 0)), float(spec.get("q0", 0)), X)
            if kind == "fourier":
                return CanonicalPotential.fourier(*(_floats(spec.get(k, "")) for k in ("p_cos", "p_sin", "q_cos", "q_sin")),
                                                  domain_end=X)
            if kind == "gauss-bumps":
                bumps = [tuple(float(v) for v in b.split(":")) for b in spec.get("bumps", "").split(";") if b.strip()]
                return CanonicalPotential.gauss_bumps(bumps, X)
            if kind == "linear":
                return CanonicalPotential.linear(float(spec.get("slope", 1.0)), X)
            if kind == "sampled":
                f = Path(spec["file"])
                f = f if f.is_absolute() else self.base_dir / f
                x, p, q = read_table(f, ("x", "p", "q"))
                return CanonicalPotential.sampled(x, p, q)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad potential spec for kind {kind!r}: {exc}") from exc
        raise ConfigError(f"unknown potential.kind {kind!r}")


# CSV ---------------------------------------------------------------------------


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def render_table(header, columns, comments=(), trailer=()) -> str:
    """``#`` comment lines, one header row, the rows, then trailing comment lines."""
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in zip(*columns):
        lines.append(",".join(fmt(v) for v in row))
    lines.extend(f"# {c}" for c in trailer)
    return "\n".join(lines) + "\n"


def write_table(path, header, columns, comments=(), trailer=()):
    Path(path).write_text(render_table(header, columns, comments, trailer))


def read_rows(path, header) -> list[tuple[int, list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    rows, seen_header = [], False
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if not seen_header:
            seen_header = True
            if cells != list(header):
                raise ConfigError(f"{path}:{lineno}: expected header {','.join(header)}, got {line!r}")
            continue
        if len(cells) != len(header):
            raise ConfigError(f"{path}:{lineno}: expected {len(header)} fields, got {line!r}")
        rows.append((lineno, cells))
    return rows


def read_table(path, header) -> tuple[np.ndarray, ...]:
    rows = read_rows(path, header)
    cols = [[] for _ in header]
    for lineno, cells in rows:
        try:
            for c, v in zip(cols, cells):
                c.append(float(v))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: non-numeric field in {','.join(cells)!r}") from None
    return tuple(np.array(c) for c in cols)


def read_comments(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") and "=" in line:
            k, v = line[1:].split("=", 1)
            out[k.strip()] = v.strip()
    return out
