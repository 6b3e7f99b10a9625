"""Finite-difference oracle, deliberately independent of the jet kernel.

Partial derivatives are tensor products of one-dimensional central stencils,
refined by Richardson extrapolation.  The raw stencil error is ``O(h^2)``, so
each level removes the next even power.  The step is relative: along coordinate
``k`` it is ``h * (1 + |z_k|)``.  Higher orders need larger steps to keep
roundoff (``~ eps / h^order``) under control, hence a per-order default.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError

_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
}


@dataclass(frozen=True)
class FDOracle:
    """Central differences with Richardson extrapolation.

    ``steps[k]`` is the relative step used when the total derivative order is ``k``.
    """

    steps: dict = field(default_factory=lambda: {1: 1e-4, 2: 1e-3, 3: 1e-2})
    levels: int = 2

    def derivative(
        self,
        f: Callable[[np.ndarray], float],
        z: Sequence[float],
        alpha: Sequence[int],
        valid: Callable[[np.ndarray], bool] | None = None,
    ) -> float:
        """``d^alpha f`` at ``z``; ``alpha`` is a multi-index over all coordinates."""
        z = np.asarray(z, dtype=float)
        alpha = tuple(int(a) for a in alpha)
        order = sum(alpha)
        if order == 0:
            return float(f(z))
        if order > 3 or any(a > 3 for a in alpha):
            raise ValueError("the oracle supports derivative orders up to 3")
        h = self.steps[order]
        estimates = [self._raw(f, z, alpha, h / 2**k, valid) for k in range(self.levels + 1)]
        for level in range(1, self.levels + 1):
            w = 4.0**level
            estimates = [(w * fine - coarse) / (w - 1) for coarse, fine in zip(estimates, estimates[1:])]
        return float(estimates[0])

    def _raw(self, f, z, alpha, h, valid) -> float:
        axes = [(k, a) for k, a in enumerate(alpha) if a]
        steps = [h * (1 + abs(z[k])) for k, _ in axes]
        total = 0.0
        for combo in itertools.product(*(_STENCILS[a].items() for _, a in axes)):
            w = 1.0
            zz = z.copy()
            for (k, _), (offset, coeff), hk in zip(axes, combo, steps):
                zz[k] += offset * hk
                w *= coeff
            if valid is not None and not valid(zz):
                raise DomainError(f"finite-difference stencil left the validity domain at {zz}")
            try:
                value = f(zz)
            except (ValueError, ZeroDivisionError, FloatingPointError) as exc:
                raise DomainError(f"stencil evaluation failed at {zz}: {exc}") from exc
            total += w * value
        return total / float(np.prod([hk**a for hk, (_, a) in zip(steps, axes)]))

    def gradient(self, f, z, coords, valid=None) -> np.ndarray:
        out = []
        for c in coords:
            alpha = [0] * len(z)
            alpha[c] += 1
            out.append(self.derivative(f, z, alpha, valid))
        return np.array(out)


def _multi(n2: int, *coords: int) -> list[int]:
    alpha = [0] * n2
    for c in coords:
        alpha[c] += 1
    return alpha


@dataclass
class OracleTensors:
    g_upper: np.ndarray
    cartan: np.ndarray
    N: np.ndarray


def oracle_tensors(k2: Callable[[np.ndarray], float], z: Sequence[float], n: int,
                   oracle: FDOracle | None = None, valid=None) -> OracleTensors:
    """``g^ij``, ``C^ijk`` and ``N_ij`` assembled purely from finite differences of ``K^2``."""
    oracle = oracle or FDOracle()
    z = np.asarray(z, dtype=float)
    n2 = 2 * n
    P = range(n, n2)

    def d(*coords):
        return oracle.derivative(k2, z, _multi(n2, *coords), valid)

    g_up = np.empty((n, n))
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        g_up[i, j] = g_up[j, i] = 0.5 * d(P[i], P[j])
    d3p = np.empty((n, n, n))
    for i, j, k in itertools.combinations_with_replacement(range(n), 3):
        v = 0.5 * d(P[i], P[j], P[k])
        for a, b, c in itertools.permutations((i, j, k)):
            d3p[a, b, c] = v
    dgu_dx = np.empty((n, n, n))
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        for k in range(n):
            dgu_dx[i, j, k] = dgu_dx[j, i, k] = 0.5 * d(P[i], P[j], k)
    g_low = np.linalg.inv(g_up)
    dgl_dx = -np.einsum("ia,abk,bj->ijk", g_low, dgu_dx, g_low)
    dgl_dp = -np.einsum("ia,abk,bj->ijk", g_low, d3p, g_low)
    bracket = np.einsum("jsk->jks", dgl_dx) + np.einsum("skj->jks", dgl_dx) - dgl_dx
    gamma = 0.5 * np.einsum("is,jks->ijk", g_up, bracket)
    p = z[n:]
    p_up = g_up @ p
    gamma0 = np.einsum("ijk,i->jk", gamma, p)
    N = gamma0 - 0.5 * np.einsum("h,ijh->ij", gamma0 @ p_up, dgl_dp)
    return OracleTensors(g_upper=g_up, cartan=-0.5 * d3p, N=N)
