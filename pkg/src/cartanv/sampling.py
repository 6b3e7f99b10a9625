"""Run configuration and seeded sampling of admissible phase points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cartan import CartanStructure, PhasePoint
from .errors import ConfigurationError, SamplingExhausted

OVERSAMPLING = 10


@dataclass(frozen=True)
class RunConfig:
    metric: str | None = "randers-dual"
    metric_file: str | None = None
    dim: int | None = None
    samples: int = 100
    seed: int = 42
    tol_ad: float = 1e-9
    tol_fd: float = 1e-5
    tol_curv: float = 1e-7
    p_floor: float = 0.05
    x_box: tuple[float, float] = (-1.0, 1.0)
    p_shell: tuple[float, float] = (0.5, 2.0)
    checks: tuple[str, ...] | None = None
    output: str | None = None
    fmt: str = "text"
    timing: bool = False
    threads: int | None = None

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigurationError("samples must be at least 1")
        if self.dim is not None and self.dim < 2:
            raise ConfigurationError("dimension must be at least 2")
        for name in ("tol_ad", "tol_fd", "tol_curv", "p_floor"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        lo, hi = self.p_shell
        if not 0 < lo <= hi:
            raise ConfigurationError("p_shell must satisfy 0 < low <= high")
        if not self.x_box[0] <= self.x_box[1]:
            raise ConfigurationError("x_box must satisfy low <= high")
        if self.fmt not in ("text", "json"):
            raise ConfigurationError("format must be 'text' or 'json'")
        if self.metric_file is not None:
            object.__setattr__(self, "metric", None)  # a file overrides the default label
        elif self.metric is None:
            raise ConfigurationError("give a metric label or a metric file")

    @property
    def tolerances(self) -> dict[str, float]:
        return {"ad": self.tol_ad, "fd": self.tol_fd, "curv": self.tol_curv}


@dataclass(frozen=True)
class SampleSet:
    points: tuple[PhasePoint, ...]
    candidates: int

    @property
    def acceptance_rate(self) -> float:
        return len(self.points) / self.candidates if self.candidates else 0.0


def admissible(structure: CartanStructure, z: PhasePoint, p_floor: float) -> bool:
    if not structure.is_valid(z):
        return False
    return abs(z.p[-1]) >= p_floor * z.p_norm


def sample_points(cfg: RunConfig, structure: CartanStructure) -> SampleSet:
    """Deterministic draw: ``x`` uniform in the box, ``p = r u`` with ``u`` uniform on
    the sphere and ``r`` uniform in the shell, rejecting inadmissible points."""
    rng = np.random.default_rng(cfg.seed)
    n = structure.dim
    points: list[PhasePoint] = []
    budget = OVERSAMPLING * cfg.samples
    drawn = 0
    while len(points) < cfg.samples and drawn < budget:
        drawn += 1
        x = rng.uniform(*cfg.x_box, size=n)
        u = rng.normal(size=n)
        u /= np.linalg.norm(u)
        r = rng.uniform(*cfg.p_shell)
        z = PhasePoint(tuple(float(v) for v in x), tuple(float(v) for v in r * u))
        if admissible(structure, z, cfg.p_floor):
            points.append(z)
    if len(points) < cfg.samples:
        raise SamplingExhausted(
            f"only {len(points)} of {cfg.samples} admissible points in {drawn} candidates"
        )
    return SampleSet(tuple(points), drawn)
