"""The vertical Liouville apparatus: ``C*``, ``xi*``, ``zeta``, the projector ``P``,
the functions ``t^j``, the fields ``bar-d^j`` and the full adapted frame.

Vertical vectors are written with lower components ``v_i`` along ``d/dp_i``; the
fiber metric on them is ``g^ij v_i w_j``.  The retained indices ``a`` always run
over the first ``n - 1`` momenta, the last field being dependent on them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import jets
from .cartan import normalized
from .frames import lie_bracket_value
from .state import GeometryState


@dataclass
class LiouvilleData:
    C_star: np.ndarray
    xi_star: np.ndarray
    zeta: np.ndarray
    t: np.ndarray
    P: np.ndarray  # (P v)_j = P[j, i] v_i on lower vertical components
    E: np.ndarray  # row j: components of bar-d^j along d/dp_i


@dataclass
class ReducedBasis:
    rows: np.ndarray  # (n-1, n) lower components of bar-d^a
    dependency: np.ndarray  # bar-d^n = -sum_a dependency[a] bar-d^a
    dependency_residual: float
    smallest_singular_value: float


@dataclass
class FullFrame:
    Xbar: np.ndarray  # (n-1, 2n)
    xi_star: np.ndarray
    bar: np.ndarray  # (n-1, 2n)
    C_star: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """Rows in the order ``Xbar^a, xi*, bar-d^a, C*``."""
        return np.vstack([self.Xbar, self.xi_star, self.bar, self.C_star])


def projector(p: np.ndarray, zeta: np.ndarray, K: float) -> np.ndarray:
    return np.eye(len(p)) - np.outer(p, zeta) / K


def liouville_data(K, z=None) -> LiouvilleData:
    s = GeometryState.coerce(K, z)
    return LiouvilleData(
        C_star=s.C_star_jet.value,
        xi_star=s.xi_star_jet.value,
        zeta=s.zeta,
        t=s.t,
        P=projector(s.p, s.zeta, s.Kval),
        E=s.E_jet.value,
    )


def vertical_metric(s: GeometryState, v, w) -> float:
    return float(v @ s.g_upper @ w)


def liouville_residuals(K, z=None) -> dict[str, float]:
    s = GeometryState.coerce(K, z)
    d = liouville_data(s)
    C, bar = d.C_star, s.bar_jet.value
    sv = np.linalg.svd(d.E, compute_uv=False)
    return {
        "c_star_norm": normalized(abs(s.metric(C, C) - s.K2), s.K2),
        "bar_orthogonal": max(abs(s.metric(b, C)) for b in bar) / (1 + s.Kval),
        "projector_idempotent": float(np.abs(d.P @ d.P - d.P).max()),
        "projector_kills_c": normalized(np.abs(d.P @ s.p).max(), np.linalg.norm(s.p)),
        "t_pairing": abs(s.p @ d.t - 1.0),
        "e_rank": sv[-1] / sv[0],
        "e_rank_deficit_gap": 0.0 if sv[-2] / sv[0] > 1e-8 else 1.0,
    }


def projector_residuals(K, z=None, rng: np.random.Generator | None = None, draws: int = 3) -> dict[str, float]:
    """``P`` on random vertical vectors: metric splitting, reconstruction,
    agreement of its two expressions and the membership predicate."""
    s = GeometryState.coerce(K, z)
    rng = rng or np.random.default_rng(0)
    d = liouville_data(s)
    K_ = s.Kval
    alt = np.eye(s.n) - np.outer(s.p, s.p_upper) / s.K2
    out = {"split": 0.0, "reconstruct": 0.0, "forms_agree": float(np.abs(alt - d.P).max()), "membership": 0.0}
    for _ in range(draws):
        X, Y = rng.normal(size=(2, s.n))
        PX, PY = d.P @ X, d.P @ Y
        zx, zy = d.zeta @ X, d.zeta @ Y
        lhs = vertical_metric(s, PX, PY)
        rhs = vertical_metric(s, X, Y) - zx * zy
        out["split"] = max(out["split"], normalized(abs(lhs - rhs), np.linalg.norm(X) * np.linalg.norm(Y)))
        rec = PX + zx * s.p / K_
        out["reconstruct"] = max(out["reconstruct"], normalized(np.abs(rec - X).max(), np.abs(X).max()))
        out["membership"] = max(out["membership"], normalized(abs(PX @ s.p_upper), np.linalg.norm(X) * K_))
    return out


def reduced_vertical_basis(K, z=None) -> ReducedBasis:
    s = GeometryState.coerce(K, z)
    s.require_adapted()
    E = s.E_jet.value
    coef = s.p[:-1] / s.p[-1]
    dep = E[-1] + coef @ E[:-1]
    rows = E[:-1]
    return ReducedBasis(
        rows=rows,
        dependency=coef,
        dependency_residual=normalized(np.abs(dep).max(), np.abs(E).max()),
        smallest_singular_value=float(np.linalg.svd(rows, compute_uv=False)[-1]),
    )


def t_identities(K, z=None) -> dict[str, float]:
    """``p_i t^i = 1``, ``p_i bar-d^i = 0``, the momentum derivative of ``t`` and ``C*(t) = -t``."""
    s = GeometryState.coerce(K, z)
    t = s.t
    E = s.E_jet.value
    dt = jets.grad(s.t_jet, range(s.n, 2 * s.n)).value  # [i, j] = dt^i / dp_j
    predicted = -2 * np.outer(t, t) + s.g_upper / s.K2
    c_t = dt @ s.p
    return {
        "t_pairing": abs(s.p @ t - 1.0),
        "bar_dependency": normalized(np.abs(s.p @ E).max(), np.linalg.norm(s.p)),
        "dt_dp": normalized(np.abs(dt - predicted).max(), np.abs(predicted).max()),
        "c_star_t": normalized(np.abs(c_t + t).max(), np.abs(t).max()),
    }


def bracket_identities(K, z=None) -> dict[str, float]:
    s = GeometryState.coerce(K, z)
    bars = list(s.bar_jet)
    barv = s.bar_jet.value
    t = s.t
    C = s.C_star_jet
    out = {"bar_bar": 0.0, "bar_c": 0.0, "bar_c_zeta": 0.0}
    for i, j in itertools.combinations(range(s.n), 2):
        br = lie_bracket_value(bars[i], bars[j])
        rhs = t[i] * barv[j] - t[j] * barv[i]
        out["bar_bar"] = max(out["bar_bar"], normalized(np.abs(br - rhs).max(), np.abs(rhs).max()))
    for i in range(s.n):
        br = lie_bracket_value(bars[i], C)
        out["bar_c"] = max(out["bar_c"], normalized(np.abs(br - barv[i]).max(), np.abs(barv[i]).max()))
        h, v = s.adapted_components(br)
        out["bar_c_zeta"] = max(out["bar_c_zeta"], abs(s.zeta @ v) + np.abs(h).max())
    return out


def integrability_check(K, z=None) -> tuple[float, float]:
    """``max |G([bar-d^a, bar-d^b], C*)|`` and the unasserted control ``max |G([bar-d^a, C*], bar-d^b)|``."""
    s = GeometryState.coerce(K, z)
    s.require_adapted()
    bars = list(s.bar_jet)[:-1]
    barv = s.bar_jet.value
    C = s.C_star_jet.value
    res = 0.0
    for a, b in itertools.combinations(range(s.n - 1), 2):
        br = lie_bracket_value(bars[a], bars[b])
        res = max(res, abs(s.metric(br, C)) / (1 + np.linalg.norm(br) * s.Kval))
    control = 0.0
    for a in range(s.n - 1):
        br = lie_bracket_value(bars[a], s.C_star_jet)
        for b in range(s.n - 1):
            control = max(control, abs(s.metric(br, barv[b])))
    return res, control


def full_frame(K, z=None) -> FullFrame:
    s = GeometryState.coerce(K, z)
    s.require_adapted()
    return FullFrame(
        Xbar=s.Xbar_jet.value[:-1],
        xi_star=s.xi_star_jet.value,
        bar=s.bar_jet.value[:-1],
        C_star=s.C_star_jet.value,
    )


def frame_groups(n: int) -> list[slice]:
    m = n - 1
    return [slice(0, m), slice(m, m + 1), slice(m + 1, 2 * m + 1), slice(2 * m + 1, 2 * m + 2)]


def full_frame_residuals(K, z=None) -> dict[str, float]:
    s = GeometryState.coerce(K, z)
    ff = full_frame(s)
    F = ff.matrix
    gram = F @ s.G @ F.T
    scale = np.abs(gram).max()
    off = 0.0
    groups = frame_groups(s.n)
    for gi, gj in itertools.combinations(groups, 2):
        off = max(off, np.abs(gram[gi, gj]).max())
    sv = np.linalg.svd(F, compute_uv=False)
    j_xi = s.J @ ff.xi_star
    return {
        "block_diagonal": normalized(off, scale),
        "rank": 0.0 if sv[-1] / sv[0] > 1e-10 else 1.0,
        "xi_norm": normalized(abs(s.metric(ff.xi_star, ff.xi_star) - s.K2), s.K2),
        "j_xi": normalized(np.abs(j_xi + ff.C_star).max(), np.abs(ff.C_star).max()),
    }


def xbar_fields(s: GeometryState):
    """Jet fields of the full frame, in the order of :class:`FullFrame`."""
    m = s.n - 1
    X = list(s.Xbar_jet)[:m]
    B = list(s.bar_jet)[:m]
    return X, s.xi_star_jet, B, s.C_star_jet

