"""RK4 integration of fiber geodesics (position frozen) for the trajectory experiment.

Along a geodesic of the fiber metric the lower components obey
``dp/ds = v`` and ``dv_k/ds = C_k^ij v_i v_j``.  A radial start ``v = p/K`` must
stay on the straight line ``p + s v``; the energy ``g^ij v_i v_j`` is conserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cartan import CartanStructure, PhasePoint, fundamental_tensors
from .fiber import geodesic_rhs


@dataclass
class GeodesicRun:
    s: np.ndarray
    p: np.ndarray  # (steps + 1, n)
    v: np.ndarray
    energy: np.ndarray

    @property
    def energy_drift(self) -> float:
        return float(np.abs(self.energy - self.energy[0]).max() / abs(self.energy[0]))

    @property
    def line_deviation(self) -> float:
        """Distance from the straight line ``p0 + s v0`` (zero for radial starts)."""
        line = self.p[0] + np.outer(self.s, self.v[0])
        return float(np.abs(self.p - line).max())


def _energy(K: CartanStructure, x, p, v) -> float:
    g = fundamental_tensors(K, PhasePoint(tuple(x), tuple(p))).g_upper
    return float(v @ g @ v)


def integrate(K: CartanStructure, x, p0, v0=None, h: float = 1e-3, steps: int = 200) -> GeodesicRun:
    """Classical RK4; ``v0`` defaults to the unit radial direction ``p0/K``."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p0, dtype=float)
    if v0 is None:
        v = p / np.sqrt(K.evaluate(PhasePoint(tuple(x), tuple(p))))
    else:
        v = np.asarray(v0, dtype=float)

    def rhs(state):
        q, w = state[: len(p)], state[len(p):]
        return np.concatenate([w, geodesic_rhs(K, x, q, w)])

    y = np.concatenate([p, v])
    ys = [y]
    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys.append(y)
    arr = np.array(ys)
    n = len(p)
    energy = np.array([_energy(K, x, row[:n], row[n:]) for row in arr])
    return GeodesicRun(np.arange(steps + 1) * h, arr[:, :n], arr[:, n:], energy)
