"""Check orchestration: load the metric, sample, evaluate, aggregate."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ConfigurationError, GeometryError
from .metrics import MetricDescriptor, builtin, certify, load_metric_file, parse_expression
from .registry import BY_NAME, Check, PointContext, default_selection
from .sampling import RunConfig, SampleSet, sample_points

ENGINE = "cartanv"
THREADS_ENV = "CARTANV_THREADS"
DEFAULT_WORKERS = 4


@dataclass
class CheckResult:
    name: str
    anchor: str
    samples: int
    skipped: int
    max_residual: float
    tolerance: float
    verdict: str
    errors: dict[str, int] = field(default_factory=dict)


@dataclass
class CheckReport:
    engine: str
    version: str
    metric: dict
    config: dict
    sampling: dict
    checks: list[CheckResult]
    wall_ms: float | None = None
    error: dict | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.verdict == "pass" for c in self.checks)

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return 2
        return 0 if self.passed else 1


def load_descriptor(cfg: RunConfig, certified: bool = True) -> MetricDescriptor:
    """Built-in or file metric; ``certified=False`` skips the homogeneity certificate."""
    if cfg.metric_file is not None:
        if certified:
            return load_metric_file(cfg.metric_file, cfg.dim)
        text = Path(cfg.metric_file).read_text(encoding="utf-8")
        structure = parse_expression(text, cfg.dim, Path(cfg.metric_file).stem)
        return MetricDescriptor(structure.label, structure.dim, structure, text.strip())
    descriptor = builtin(cfg.metric, cfg.dim or 3)
    if certified:
        certify(descriptor.structure)
    return descriptor


def select_checks(cfg: RunConfig, descriptor: MetricDescriptor) -> list[Check]:
    if cfg.checks is None:
        return default_selection(descriptor)
    unknown = [c for c in cfg.checks if c not in BY_NAME]
    if unknown:
        raise ConfigurationError(f"unknown checks: {', '.join(unknown)}")
    return [BY_NAME[c] for c in cfg.checks]


def worker_count(cfg: RunConfig) -> int:
    """Worker processes: explicit setting, else up to four capped by ``CARTANV_THREADS``."""
    if cfg.threads is not None:
        return max(1, cfg.threads)
    count = min(DEFAULT_WORKERS, os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            count = min(count, max(1, int(cap)))
        except ValueError as exc:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer") from exc
    return count


def evaluate_point(descriptor: MetricDescriptor, checks: list[Check], point, index: int, seed: int):
    """Residual (or the error class name) of every check at one point."""
    ctx = PointContext(descriptor, point, index, seed)
    out = []
    for check in checks:
        try:
            r = float(check.residual(ctx))
            out.append(r if math.isfinite(r) else math.inf)
        except GeometryError as exc:
            out.append(type(exc).__name__)
    return out


def _evaluate_chunk(cfg: RunConfig, names: list[str], items: list[tuple[int, object]]):
    descriptor = load_descriptor(cfg, certified=False)
    checks = [BY_NAME[n] for n in names]
    return [evaluate_point(descriptor, checks, z, i, cfg.seed) for i, z in items]


def _evaluate_all(cfg: RunConfig, descriptor: MetricDescriptor, checks: list[Check], samples: SampleSet):
    items = list(enumerate(samples.points))
    workers = min(worker_count(cfg), len(items))
    if workers <= 1:
        return [evaluate_point(descriptor, checks, z, i, cfg.seed) for i, z in items]
    chunks = [items[k::workers] for k in range(workers)]
    names = [c.name for c in checks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_evaluate_chunk, [cfg] * workers, [names] * workers, chunks))
    rows: dict[int, list] = {}
    for chunk, part in zip(chunks, parts):
        for (i, _), row in zip(chunk, part):
            rows[i] = row
    return [rows[i] for i in range(len(items))]


def aggregate(check: Check, column: list, tolerance: float) -> CheckResult:
    residuals = [r for r in column if not isinstance(r, str)]
    errors: dict[str, int] = {}
    for r in column:
        if isinstance(r, str):
            errors[r] = errors.get(r, 0) + 1
    worst = max(residuals) if residuals else math.inf
    verdict = "pass" if residuals and worst <= tolerance else "fail"
    return CheckResult(check.name, check.anchor, len(residuals), len(column) - len(residuals),
                       worst, tolerance, verdict, dict(sorted(errors.items())))


def _config_record(cfg: RunConfig) -> dict:
    return {
        "seed": cfg.seed,
        "samples": cfg.samples,
        "tolerances": {"ad": cfg.tol_ad, "fd": cfg.tol_fd, "curv": cfg.tol_curv},
        "p_floor": cfg.p_floor,
        "x_box": list(cfg.x_box),
        "p_shell": list(cfg.p_shell),
    }


def run_suite(cfg: RunConfig) -> CheckReport:
    """Run the selected checks; configuration errors propagate."""
    start = time.perf_counter()
    descriptor = load_descriptor(cfg)
    checks = select_checks(cfg, descriptor)
    samples = sample_points(cfg, descriptor.structure)
    rows = _evaluate_all(cfg, descriptor, checks, samples) if checks else []
    tolerances = cfg.tolerances
    results = [
        aggregate(check, [row[k] for row in rows], check.tolerance_value(tolerances))
        for k, check in enumerate(checks)
    ]
    report = CheckReport(
        engine=ENGINE,
        version=__version__,
        metric={"label": descriptor.label, "dim": descriptor.dim, "flags": descriptor.flags,
                "expression": descriptor.expression},
        config=_config_record(cfg),
        sampling={"candidates": samples.candidates, "accepted": len(samples.points),
                  "acceptance_rate": samples.acceptance_rate},
        checks=results,
    )
    if cfg.timing:
        report.wall_ms = (time.perf_counter() - start) * 1e3
    return report


def failed_report(cfg: RunConfig, exc: Exception) -> CheckReport:
    """Report carrying a configuration or metric error (exit status 2)."""
    return CheckReport(
        engine=ENGINE,
        version=__version__,
        metric={"label": cfg.metric or cfg.metric_file, "dim": cfg.dim, "flags": {}},
        config=_config_record(cfg),
        sampling={},
        checks=[],
        error={"type": type(exc).__name__, "message": str(exc)},
    )
