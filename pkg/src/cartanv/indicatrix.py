"""The indicatrix ``{K = c}`` as a CR-submanifold of the Sasaki model.

The tangent frame is ``Xbar^a, xi*, bar-d^a`` (retained ``a``) and the unit
normal is ``C*/K``.  The top form ``nu`` uses the coframe dual to a
``G``-orthonormal frame of the holomorphic distribution: ``e_a`` is the
Gram-Schmidt orthonormalisation of ``bar-d^a`` and ``f_a = J e_a``.  Covectors are
ordered ``omega_1, theta_1, omega_2, theta_2, ...``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import jets
from .cartan import PhasePoint, normalized
from .errors import AdaptedBasisDegenerate, IllConditioned
from .frames import exterior_derivative_pointwise, lie_bracket_value, two_form
from .state import GeometryState
from .subfoliation import random_polynomial


@dataclass
class IndicatrixFrame:
    tangent: np.ndarray  # (2n-1, 2n): Xbar^a, xi*, bar-d^a
    normal: np.ndarray  # C*/K
    orthonormal: np.ndarray  # (2n-2, 2n): f_1, e_1, f_2, e_2, ...
    coframe: np.ndarray  # (2n-2, 2n): covectors dual to ``orthonormal``
    level: float


def on_indicatrix(K, z: PhasePoint, c: float = 1.0) -> PhasePoint:
    """Radially rescale the momenta so that ``K = c`` (degree-1 homogeneity)."""
    k = float(np.sqrt(K.k2_of_z(z.z)))
    return z.scaled(c / k)


def gram_schmidt(vectors: np.ndarray, G: np.ndarray, cond: float = 1e10) -> np.ndarray:
    out = []
    for v in vectors:
        w = v - sum((v @ G @ e) * e for e in out) if out else v.copy()
        nrm2 = w @ G @ w
        if nrm2 <= (v @ G @ v) / cond:
            raise IllConditioned("orthonormalisation degenerates")
        out.append(w / np.sqrt(nrm2))
    return np.array(out)


def pfaffian(A: np.ndarray) -> float:
    """Pfaffian of a skew matrix by elimination with partial pivoting."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n % 2:
        return 0.0
    res = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            res = -res
        if A[k + 1, k] == 0.0:
            return 0.0
        res *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            col = A[k + 2:, k + 1]
            A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return float(res)


def indicatrix_frame(K, z=None) -> IndicatrixFrame:
    s = GeometryState.coerce(K, z)
    s.require_adapted()
    m = s.n - 1
    G = s.G
    Xbar = s.Xbar_jet.value[:m]
    bar = s.bar_jet.value[:m]
    tangent = np.vstack([Xbar, s.xi_star_jet.value[None, :], bar])
    if np.linalg.matrix_rank(tangent @ G @ tangent.T) < 2 * s.n - 1:
        raise AdaptedBasisDegenerate("tangent Gram matrix is rank deficient")
    normal = s.C_star_jet.value / s.Kval
    try:
        e = gram_schmidt(bar, G)
    except IllConditioned as exc:
        raise AdaptedBasisDegenerate(str(exc)) from exc
    f = e @ s.J.T
    ortho = np.empty((2 * m, 2 * s.n))
    ortho[0::2], ortho[1::2] = f, e
    full = np.vstack([ortho, s.xi_star_jet.value / s.Kval, normal]).T
    dual = np.linalg.inv(full)
    return IndicatrixFrame(tangent, normal, ortho, dual[: 2 * m], s.Kval)


def _component_outside(w: np.ndarray, basis: np.ndarray, G: np.ndarray) -> float:
    gram = basis @ G @ basis.T
    coef = np.linalg.solve(gram, basis @ G @ w)
    rest = w - coef @ basis
    return float(np.sqrt(max(rest @ G @ rest, 0.0)))


def cr_certificate(K, z=None) -> dict[str, float]:
    s = GeometryState.coerce(K, z)
    fr = indicatrix_frame(s)
    m = s.n - 1
    G, J = s.G, s.J
    Xbar, bar = fr.tangent[:m], fr.tangent[m + 1:]
    xi = fr.tangent[m]
    C = s.C_star_jet.value
    D = np.vstack([Xbar, bar])
    out = {"invariant": 0.0, "j_bar": 0.0, "j_xbar": 0.0}
    for v in D:
        w = J @ v
        out["invariant"] = max(out["invariant"], normalized(_component_outside(w, D, G), math.sqrt(w @ G @ w)))
    for a in range(m):
        out["j_bar"] = max(out["j_bar"], normalized(np.abs(J @ bar[a] - Xbar[a]).max(), np.abs(Xbar[a]).max()))
        out["j_xbar"] = max(out["j_xbar"], normalized(np.abs(J @ Xbar[a] + bar[a]).max(), np.abs(bar[a]).max()))
    w = J @ xi
    out["anti_invariant"] = normalized(_component_outside(w, C[None, :], G), s.Kval)
    out["j_xi"] = normalized(np.abs(w + C).max(), np.abs(C).max())
    return out


def nu_values(K, z=None) -> list[tuple[tuple[int, ...], float, float]]:
    """``(tuple, nu, (-1)^(n-1) Pf)`` for every ``(2n-2)``-subtuple of the tangent frame."""
    s = GeometryState.coerce(K, z)
    fr = indicatrix_frame(s)
    k = 2 * (s.n - 1)
    sign = (-1) ** (s.n - 1)
    W = s.Omega
    out = []
    for idx in itertools.combinations(range(2 * s.n - 1), k):
        V = fr.tangent[list(idx)]
        nu = float(np.linalg.det(fr.coframe @ V.T))
        out.append((idx, nu, sign * pfaffian(V @ W @ V.T)))
    return out


def nu_form_identity(K, z=None) -> float:
    vals = nu_values(K, z)
    return max(normalized(abs(a - b), abs(a) + abs(b)) for _, a, b in vals)


def nu_ordering_diagnostics(K, z=None) -> dict[str, float]:
    """Two literal readings of the identity, recorded but not asserted.

    ``block_order``: covectors ordered ``omega_1..omega_m, theta_1..theta_m``, which
    multiplies ``nu`` by ``(-1)^(m(m-1)/2)``.  ``raw_dual``: covectors dual to the raw
    (non-orthonormal) frame, so ``nu(Xbar, bar) = 1`` while the Pfaffian side
    carries the Gram determinant.
    """
    s = GeometryState.coerce(K, z)
    fr = indicatrix_frame(s)
    m = s.n - 1
    flip = (-1) ** (m * (m - 1) // 2)
    block = max(abs(flip * a - b) for _, a, b in nu_values(s))
    V = np.vstack([fr.tangent[:m], fr.tangent[m + 1:]])
    pf = (-1) ** (s.n - 1) * pfaffian(V @ s.Omega @ V.T)
    raw_nu = 1.0 if m % 2 == 0 else -1.0  # interleaved order on (Xbar, bar) in block order
    return {"block_order": block, "raw_dual": abs(raw_nu * flip - pf)}


def nu_repeated_field(K, z=None) -> float:
    s = GeometryState.coerce(K, z)
    fr = indicatrix_frame(s)
    V = fr.tangent[[0] * 2 + list(range(2, 2 * s.n - 1))][: 2 * (s.n - 1)]
    return abs(float(np.linalg.det(fr.coframe @ V.T)))


def tangent_jet_fields(s: GeometryState) -> list:
    m = s.n - 1
    return list(s.Xbar_jet)[:m] + [s.xi_star_jet] + list(s.bar_jet)[:m]


def pullback_closedness(K, z=None) -> float:
    s = GeometryState.coerce(K, z)
    s.require_adapted()
    form = two_form(s.Omega_jet)
    out = 0.0
    for trip in itertools.combinations(tangent_jet_fields(s), 3):
        out = max(out, abs(exterior_derivative_pointwise(form, trip)))
    return out


def levi_civita_symbols(s: GeometryState) -> np.ndarray:
    """Christoffel symbols ``[k, i, j]`` of ``G`` in natural coordinates."""
    dG = jets.grad(s.G_jet, range(2 * s.n)).value  # [l, j, i] = dG_lj / dz_i
    Ginv = np.linalg.inv(s.G)
    # lower[l, i, j] = (d_i G_lj + d_j G_li - d_l G_ij) / 2
    lower = 0.5 * (np.einsum("lji->lij", dG) + dG - np.einsum("ijl->lij", dG))
    return np.einsum("kl,lij->kij", Ginv, lower)


def holomorphic_minimality(K, z=None) -> float:
    """``sum_alpha G(nabla_{e_alpha} e_alpha, xi*/K)`` over an orthonormal basis of the
    holomorphic distribution, computed as ``-sum G(e_alpha, nabla_{e_alpha} xi*/K)``."""
    s = GeometryState.coerce(K, z)
    fr = indicatrix_frame(s)
    m = s.n - 1
    G = s.G
    D = np.vstack([fr.tangent[:m], fr.tangent[m + 1:]])
    basis = gram_schmidt(D, G)
    Gam = levi_civita_symbols(s)
    unit = s.xi_star_jet / s.K_jet
    u = unit.value
    total = 0.0
    scale = 0.0
    for e in basis:
        nab = jets.directional(unit, e) + np.einsum("kij,i,j->k", Gam, e, u)
        term = -(e @ G @ nab)
        total += term
        scale += abs(term)
    return normalized(abs(total), scale)


def minimality_sign_invariance(K, z=None) -> float:
    """The trace is quadratic in the frame: flipping every ``e_alpha`` leaves it unchanged."""
    s = GeometryState.coerce(K, z)
    fr = indicatrix_frame(s)
    m = s.n - 1
    D = np.vstack([fr.tangent[:m], fr.tangent[m + 1:]])
    basis = gram_schmidt(D, s.G)
    Gam = levi_civita_symbols(s)
    unit = s.xi_star_jet / s.K_jet
    u = unit.value

    def trace(b):
        return sum(-(e @ s.G @ (jets.directional(unit, e) + np.einsum("kij,i,j->k", Gam, e, u))) for e in b)

    return abs(trace(basis) - trace(-basis))


def xi_line_check(K, z=None, rng: np.random.Generator | None = None) -> float:
    """``[xi*, f xi*]`` has no component off the line ``{xi*}``."""
    s = GeometryState.coerce(K, z)
    rng = rng or np.random.default_rng(8)
    f = random_polynomial(s, rng)
    br = lie_bracket_value(s.xi_star_jet, f * s.xi_star_jet)
    xi = s.xi_star_jet.value
    rest = br - (br @ s.G @ xi) / (xi @ s.G @ xi) * xi
    return normalized(math.sqrt(max(rest @ s.G @ rest, 0.0)), math.sqrt(max(br @ s.G @ br, 0.0)))


def tangency_residual(K, z=None) -> float:
    """``max |dK(field)| / (1 + K)`` over the tangent frame."""
    s = GeometryState.coerce(K, z)
    fr = indicatrix_frame(s)
    dK = jets.grad(s.K_jet, range(2 * s.n)).value
    return float(np.abs(fr.tangent @ dK).max() / (1 + s.Kval))
