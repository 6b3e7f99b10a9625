"""Shared fixtures-free helpers: metrics and seeded admissible points."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from cartanv.cartan import PhasePoint
from cartanv.metrics import BUILTIN_LABELS, builtin
from cartanv.sampling import RunConfig, sample_points

ALL_METRICS = BUILTIN_LABELS
CURVED = ("randers-dual", "quartic-root")


@lru_cache(maxsize=None)
def metric(label: str, dim: int = 3):
    return builtin(label, dim)


@lru_cache(maxsize=None)
def points(label: str, count: int, dim: int = 3, seed: int = 7) -> tuple[PhasePoint, ...]:
    cfg = RunConfig(metric=label, dim=dim, samples=count, seed=seed)
    return sample_points(cfg, metric(label, dim).structure).points


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)
