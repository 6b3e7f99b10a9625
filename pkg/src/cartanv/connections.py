"""The canonical metrical N-linear coefficients, the Vranceanu connection and the
Vaisman-type connection of the vertical bundle.

Index conventions for stored coefficient arrays:

* ``H[i, j, k] = H^i_jk`` with ``D_{delta_k} delta_j = H^i_jk delta_i``;
* ``torsion[i, j, k] = delta_i N_jk - delta_j N_ik`` (the ``d/dp_k`` coefficient of
  the vertical part of ``[delta_i, delta_j]``);
* ``S[b, a, d] = s^ba_d`` with ``nabla_{bar-d^a} bar-d^b = s^ba_d bar-d^d``;
* ``beta[a, b, i] = beta^a_bi`` with ``nabla_{delta_i} bar-d^a = beta^a_bi bar-d^b``.

Indices ``a, b, c, d`` run over the retained ``n - 1`` momenta.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import jets
from .cartan import christoffel, normalized
from .errors import HBlockSingular
from .frames import lie_bracket_value
from .state import GeometryState

H_BLOCK_COND_LIMIT = 1e10
REINHART_THRESHOLD = 1e-6


@dataclass
class VranceanuConnection:
    C_coeff: np.ndarray  # [k, i, j] = -C_k^ij
    D_coeff: np.ndarray  # [i, j, k] = -dN_jk/dp_i
    L_coeff: np.ndarray
    F_coeff: np.ndarray
    torsion: np.ndarray
    definitional_torsion: np.ndarray  # vertical coefficients of T(delta_i, delta_j)


@dataclass
class VaismanConnection:
    h_block: np.ndarray
    h_inverse: np.ndarray
    s_coeff: np.ndarray
    s_mixed: np.ndarray
    s_vector: np.ndarray
    s_scalar: float
    beta: np.ndarray
    beta_scalar: np.ndarray
    projection_defect: float


def delta_g_lower(s: GeometryState) -> np.ndarray:
    """``[i, j, k] = delta_k g_ij``."""
    return s.dg_lower_dx_jet.value + np.einsum("km,ijm->ijk", s.N, s.dg_lower_dp_jet.value)


def canonical_h_coeffs(K, z=None) -> np.ndarray:
    s = GeometryState.coerce(K, z)
    return christoffel(s.g_upper, delta_g_lower(s))


def h_metric_residual(K, z=None) -> dict[str, float]:
    s = GeometryState.coerce(K, z)
    H = canonical_h_coeffs(s)
    dg = delta_g_lower(s)
    g = s.g_lower
    res = dg - np.einsum("sik,sj->ijk", H, g) - np.einsum("sjk,is->ijk", H, g)
    return {
        "metric": normalized(np.abs(res).max(), np.abs(dg).max()),
        "symmetric": normalized(np.abs(H - H.transpose(0, 2, 1)).max(), np.abs(H).max()),
    }


def vranceanu(K, z=None) -> VranceanuConnection:
    s = GeometryState.coerce(K, z)
    n = s.n
    dN = s.delta_N
    tor = dN - dN.transpose(1, 0, 2)
    return VranceanuConnection(
        C_coeff=-s.cartan_low,
        D_coeff=-np.einsum("jki->ijk", s.dN_dp),
        L_coeff=np.zeros((n, n, n)),
        F_coeff=canonical_h_coeffs(s),
        torsion=tor,
        definitional_torsion=-tor,
    )


def bracket_vertical_parts(s: GeometryState) -> np.ndarray:
    """``[i, j, k]``: ``d/dp_k`` coefficient of the vertical part of ``[delta_i, delta_j]``."""
    n = s.n
    deltas = list(s.delta_jet)
    out = np.zeros((n, n, n))
    for i, j in itertools.combinations(range(n), 2):
        _, v = s.adapted_components(lie_bracket_value(deltas[i], deltas[j]))
        out[i, j], out[j, i] = v, -v
    return out


def torsion_residual(K, z=None) -> dict[str, float]:
    s = GeometryState.coerce(K, z)
    v = vranceanu(s)
    br = bracket_vertical_parts(s)
    scale = max(np.abs(br).max(), np.abs(v.torsion).max())
    n = s.n
    horiz = 0.0
    deltas = list(s.delta_jet)
    for i, j in itertools.combinations(range(n), 2):
        horiz = max(horiz, np.abs(lie_bracket_value(deltas[i], deltas[j])[:n]).max())
    return {
        "bracket": normalized(np.abs(v.torsion - br).max(), scale),
        "antisymmetric": normalized(np.abs(v.torsion + v.torsion.transpose(1, 0, 2)).max(), scale),
        "bracket_horizontal": horiz,
    }


def reinhart_residual(K, z=None) -> float:
    """``max |dg_ij/dp_k|``; zero exactly when ``g`` does not depend on the momenta."""
    s = GeometryState.coerce(K, z)
    return float(np.abs(s.dg_lower_dp_jet.value).max())


def reinhart_verdict(K, z=None, threshold: float = REINHART_THRESHOLD) -> bool:
    return reinhart_residual(K, z) <= threshold


# -- Vaisman connection ----------------------------------------------------------------

def _retained(s: GeometryState, w: np.ndarray) -> np.ndarray:
    """Retained coefficients of a vertical vector in ``L_C*`` (lower components on last axis)."""
    return w[..., :-1] - w[..., -1:] * (s.p[:-1] / s.p[-1])


def h_block(s: GeometryState) -> tuple[np.ndarray, np.ndarray]:
    m = s.n - 1
    h = s.g_upper[:m, :m] - s.K2 * np.outer(s.t[:m], s.t[:m])
    cond = np.linalg.cond(h)
    if not np.isfinite(cond) or cond > H_BLOCK_COND_LIMIT:
        raise HBlockSingular(f"h-block condition number {cond:.3g}")
    return h, np.linalg.inv(h)


def vaisman(K, z=None) -> VaismanConnection:
    s = GeometryState.coerce(K, z)
    s.require_adapted()
    n, m = s.n, s.n - 1
    h, h_inv = h_block(s)
    dg = s.g_upper_jet_dp.value[:m, :m, :m]  # [b, c, a] = dg^bc/dp_a
    t = s.t[:m]
    S = 0.5 * np.einsum("dc,bca->bad", h_inv, dg) - np.einsum("b,ad->bad", t, np.eye(m))
    E = s.E_jet.value
    bar_N = np.einsum("am,ijm->aij", E, s.dN_dp)  # bar-d^a(N_ij)
    P = np.eye(n) - np.outer(s.p, s.zeta) / s.Kval
    w = bar_N[:m]  # [a, i, j]
    Pw = np.einsum("kj,aij->aik", P, w)
    beta = np.einsum("aib->abi", _retained(s, Pw))
    defect = normalized(np.abs(np.einsum("aij,j->ai", w, s.zeta)).max(), np.abs(w).max())
    return VaismanConnection(
        h_block=h,
        h_inverse=h_inv,
        s_coeff=S,
        s_mixed=-np.eye(m),
        s_vector=np.zeros(m),
        s_scalar=1.0,
        beta=beta,
        beta_scalar=np.zeros(n),
        projection_defect=defect,
    )


def _h_jet(s: GeometryState):
    E = s.E_jet
    return jets.einsum("ai,bi->ab", E, jets.einsum("ij,bj->bi", s.g_upper_jet, E))


def axiom_residuals(s: GeometryState, vc: VaismanConnection, S: np.ndarray | None = None) -> dict[str, float]:
    """Residuals of the defining conditions for given coefficients ``S`` (default: ``vc.s_coeff``)."""
    S = vc.s_coeff if S is None else S
    n, m = s.n, s.n - 1
    E = s.E_jet.value
    Em = E[:m]
    bars = list(s.bar_jet)
    C = s.C_star_jet
    G = s.g_upper
    zeta = s.zeta
    out = {}

    # a) each block is preserved: images of bar-d^a stay orthogonal to C*
    images = np.concatenate([
        np.einsum("bad,di->bai", S, Em).reshape(-1, n),
        np.einsum("ab,bi->ai", vc.s_mixed, Em),
        np.einsum("abi,bk->aik", vc.beta, Em).reshape(-1, n),
    ])
    out["a_preserve"] = normalized(np.abs(images @ zeta).max(), np.abs(images).max())

    # b) torsion on L_C* x L_C* and on L_C* x C*
    tor = 0.0
    for a, b in itertools.combinations(range(m), 2):
        nab = S[b, a] @ Em  # nabla_{bar a} bar b
        nba = S[a, b] @ Em
        br = lie_bracket_value(bars[a], bars[b])[n:]
        tor = max(tor, normalized(np.abs(nab - nba - br).max(), np.abs(br).max()))
    out["b_torsion"] = tor
    sym = 0.0
    for a, b, c in itertools.permutations(range(m), 3):
        sym = max(sym, abs(S[a, b, c] - S[b, a, c]))
    out["b_symmetry"] = sym
    tc = 0.0
    for a in range(m):
        lhs = vc.s_vector[a] * s.p - vc.s_mixed[a] @ Em
        br = lie_bracket_value(bars[a], C)[n:]
        tc = max(tc, normalized(np.abs(lhs - br).max(), np.abs(br).max()))
    out["b_torsion_c"] = tc

    # c) metric compatibility on L_C* and on the C* line
    hj = _h_jet(s)
    met = 0.0
    for a in range(m):
        dh = jets.directional(hj, s.bar_jet.value[a])[:m, :m]
        gram = Em @ G @ Em.T
        comp = S[:, a, :] @ gram  # [b, c] = G(nabla_a bar b, bar c)
        res = dh - comp - comp.T
        met = max(met, normalized(np.abs(res).max(), np.abs(dh).max()))
    out["c_metric"] = met
    ck2 = jets.directional(s.k2_jet, s.C_star_jet.value)
    out["c_metric_c"] = normalized(abs(ck2 - 2 * vc.s_scalar * s.K2), s.K2)

    # d) beta_i = 0 and the defining relation for beta
    defining = 0.0
    P = np.eye(n) - np.outer(s.p, zeta) / s.Kval
    bar_N = np.einsum("am,ijm->aij", E, s.dN_dp)
    for a in range(m):
        target = np.einsum("kj,ij->ik", P, bar_N[a])
        got = np.einsum("bi,bk->ik", vc.beta[a], Em)
        defining = max(defining, normalized(np.abs(got - target).max(), np.abs(target).max()))
    out["d_beta"] = defining + float(np.abs(vc.beta_scalar).max())
    return out


def vaisman_reinhart_residual(K, z=None) -> float:
    """``(nabla_{bar-d^a} G)(C*, C*) = bar-d^a(K^2) - 2 s^a K^2`` over the retained ``a``."""
    s = GeometryState.coerce(K, z)
    vc = vaisman(s)
    out = 0.0
    for a in range(s.n - 1):
        d = jets.directional(s.k2_jet, s.bar_jet.value[a])
        out = max(out, normalized(abs(d - 2 * vc.s_vector[a] * s.K2), 2 * abs(s.p_upper[a])))
    return out


def vaisman_axiom_certificate(K, z=None) -> dict[str, float]:
    s = GeometryState.coerce(K, z)
    vc = vaisman(s)
    out = axiom_residuals(s, vc)
    out["reinhart"] = vaisman_reinhart_residual(s)
    return out


def uniqueness_probe(K, z=None, eps: float = 1e-3, floor: float = 1e-4, scaled: bool = True) -> tuple[bool, float]:
    """Perturb each ``s^ba_d`` in turn; every perturbation must push some residual above ``floor``.

    With ``scaled`` the perturbation is ``eps`` in normalized units: the change of
    ``nabla_{bar a} bar b`` has ``G``-length ``eps (1 + max |s|)``, matching the
    ``abs / (1 + magnitude)`` convention of the residuals.  Without it the raw
    coefficient moves by ``eps``, which is weak along short retained fields.
    Returns ``(all_broken, weakest_break)``.
    """
    s = GeometryState.coerce(K, z)
    vc = vaisman(s)
    m = s.n - 1
    if scaled:
        Em = s.E_jet.value[:m]
        lengths = np.sqrt(np.einsum("di,ij,dj->d", Em, s.g_upper, Em))
        step = eps * (1 + np.abs(vc.s_coeff).max()) / lengths
    else:
        step = np.full(m, eps)
    weakest = np.inf
    for idx in itertools.product(range(m), repeat=3):
        S = vc.s_coeff.copy()
        S[idx] += step[idx[2]]
        worst = max(axiom_residuals(s, vc, S).values())
        weakest = min(weakest, worst)
    return bool(weakest > floor), float(weakest)


def vranceanu_vaisman_contrast(K, z=None) -> dict[str, float]:
    """Vranceanu gives ``nabla_{bar-d^a} C* = bar-d^a`` while Vaisman gives ``0``."""
    from .fiber import fiber_cov_deriv

    s = GeometryState.coerce(K, z)
    vc = vaisman(s)
    E = s.E_jet.value
    vr = 0.0
    for a in range(s.n - 1):
        got = fiber_cov_deriv(s, E[a], s.p_jet)
        vr = max(vr, normalized(np.abs(got - E[a]).max(), np.abs(E[a]).max()))
    return {"vranceanu": vr, "vaisman": float(np.abs(vc.s_vector).max())}
