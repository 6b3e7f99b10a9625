"""Geometry of one fiber leaf (positions frozen) with the fiber metric ``g^ij(x, .)``.

The Levi-Civita connection of the fiber metric in momentum coordinates is

    (nabla_X Y)_k = X_i dY_k/dp_i - C_k^ij X_i Y_j,

so its Christoffel symbols are ``-C_k^ij``.  Curvature uses these symbols and
their exact momentum derivatives from the jets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import jets
from .cartan import momentum_gradient, normalized
from .jets import Jet
from .state import GeometryState


@dataclass
class FiberConnection:
    C_low: np.ndarray  # [i, j, k] = C_i^jk
    dC_dp: np.ndarray  # [i, j, k, l] = dC_i^jk / dp_l


@dataclass
class FiberCurvatureSlice:
    R_X: np.ndarray
    sectional_numerator: float
    residual: float


def fiber_connection(K, z=None) -> FiberConnection:
    s = GeometryState.coerce(K, z)
    return FiberConnection(s.cartan_low, momentum_gradient(s.cartan_low_jet, s.n).value)


def connection_forms_residual(K, z=None) -> dict[str, float]:
    """Agreement of the two expressions of ``C_i^jk`` and its contraction with ``p``."""
    s = GeometryState.coerce(K, z)
    a = s.cartan_low
    dgu = s.g_upper_jet_dp.value  # [s, k, j] = dg^sk / dp_j
    b = -0.5 * np.einsum("is,skj->ijk", s.g_lower, dgu)
    scale = np.abs(a).max()
    return {
        "forms_agree": normalized(np.abs(a - b).max(), scale),
        "p_contraction": normalized(np.abs(np.einsum("ijk,j->ik", a, s.p)).max(), scale),
        "symmetric": normalized(np.abs(a - a.transpose(0, 2, 1)).max(), scale),
    }


def _vertical_direction(s: GeometryState, X) -> np.ndarray:
    return np.concatenate([np.zeros(s.n), np.asarray(X, dtype=float)])


def vertical_derivative(s: GeometryState, f: Jet, X) -> np.ndarray | float:
    """``X_i df/dp_i`` at the base point."""
    return jets.directional(f, _vertical_direction(s, X))


def fiber_cov_deriv(s: GeometryState, X, Y) -> np.ndarray:
    """``nabla_X Y`` at the base point; ``Y`` is a jet field, constant array or jet."""
    X = jets.value(X)
    if isinstance(Y, Jet):
        lie = vertical_derivative(s, Y, X)
        y0 = Y.value
    else:
        lie = np.zeros(s.n)
        y0 = np.asarray(Y, dtype=float)
    return lie - np.einsum("kij,i,j->k", s.cartan_low, X, y0)


def random_vertical_field(s: GeometryState, rng: np.random.Generator) -> Jet:
    """Quadratic polynomial vertical field in the momenta with random coefficients."""
    n = s.n
    c = rng.normal(size=n)
    A = rng.normal(size=(n, n))
    B = 0.5 * rng.normal(size=(n, n, n))
    p = s.p_jet
    quad = jets.einsum("km,m->k", jets.einsum("klm,l->km", B, p), p)
    return quad + jets.einsum("kl,l->k", A, p) + c


def vertical_metric_jet(s: GeometryState, Y: Jet, Z: Jet) -> Jet:
    return jets.einsum("i,i->", Y, jets.einsum("ij,j->i", s.g_upper_jet, Z))


def levi_civita_residuals(K, z=None, rng: np.random.Generator | None = None, draws: int = 2) -> dict[str, float]:
    """Metric compatibility and torsion-freeness on random polynomial fields."""
    s = GeometryState.coerce(K, z)
    rng = rng or np.random.default_rng(1)
    g = s.g_upper
    out = {"metric": 0.0, "torsion": 0.0}
    for _ in range(draws):
        X, Y, Z = (random_vertical_field(s, rng) for _ in range(3))
        x = X.value
        lhs = vertical_derivative(s, vertical_metric_jet(s, Y, Z), x)
        a = fiber_cov_deriv(s, x, Y) @ g @ Z.value
        b = Y.value @ g @ fiber_cov_deriv(s, x, Z)
        out["metric"] = max(out["metric"], normalized(abs(lhs - a - b), abs(lhs) + abs(a) + abs(b)))
        bracket = vertical_derivative(s, Y, x) - vertical_derivative(s, X, Y.value)
        tor = fiber_cov_deriv(s, x, Y) - fiber_cov_deriv(s, Y.value, X) - bracket
        out["torsion"] = max(out["torsion"], normalized(np.abs(tor).max(), np.abs(bracket).max()))
    return out


def _P_jet(s: GeometryState) -> Jet:
    return s.eye - jets.einsum("j,i->ji", s.p_jet, s.zeta_jet) / s.K_jet


def lemma_suite(K, z=None, rng: np.random.Generator | None = None, draws: int = 3) -> dict[str, float]:
    """Covariant derivatives of ``C*/K``, ``zeta`` and ``P`` along random vertical vectors."""
    s = GeometryState.coerce(K, z)
    rng = rng or np.random.default_rng(2)
    g, p, K_ = s.g_upper, s.p, s.Kval
    P = np.eye(s.n) - np.outer(p, s.zeta) / K_
    unit = s.p_jet / s.K_jet
    Pj = _P_jet(s)
    out = {"radial": 0.0, "zeta": 0.0, "projector": 0.0}
    for _ in range(draws):
        X, Y = rng.normal(size=(2, s.n))
        PX, PY = P @ X, P @ Y
        lhs = fiber_cov_deriv(s, X, unit)
        out["radial"] = max(out["radial"], normalized(np.abs(lhs - PX / K_).max(), np.abs(PX).max() / K_))

        zeta_Y = jets.einsum("i,i->", s.zeta_jet, Y)
        dz = vertical_derivative(s, zeta_Y, X) - s.zeta @ fiber_cov_deriv(s, X, Y)
        rhs = PX @ g @ PY / K_
        out["zeta"] = max(out["zeta"], normalized(abs(dz - rhs), abs(rhs)))

        PY_field = jets.einsum("ji,i->j", Pj, Y)
        dP = fiber_cov_deriv(s, X, PY_field) - P @ fiber_cov_deriv(s, X, Y)
        rhs = -((PX @ g @ PY) * p + K_ * (s.zeta @ Y) * PX) / s.K2
        out["projector"] = max(out["projector"], normalized(np.abs(dP - rhs).max(), np.abs(rhs).max()))
    return out


def geodesic_residual(K, z=None) -> float:
    """``|nabla_U U|_G`` for the unit radial field ``U = C*/K``."""
    s = GeometryState.coerce(K, z)
    unit = s.p_jet / s.K_jet
    acc = fiber_cov_deriv(s, unit.value, unit)
    return float(np.sqrt(max(acc @ s.g_upper @ acc, 0.0)))


def umbilic_residual(K, z=None) -> float:
    """``zeta(nabla_X Y) + G(PX, PY)/K`` over the retained fields ``bar-d^a``."""
    s = GeometryState.coerce(K, z)
    s.require_adapted()
    E = s.E_jet
    Ev = E.value
    P = np.eye(s.n) - np.outer(s.p, s.zeta) / s.Kval
    out = 0.0
    for a, b in itertools.product(range(s.n - 1), repeat=2):
        lhs = s.zeta @ fiber_cov_deriv(s, Ev[a], E[b])
        rhs = -(P @ Ev[a]) @ s.g_upper @ (P @ Ev[b]) / s.Kval
        out = max(out, normalized(abs(lhs - rhs), abs(rhs)))
    return out


def second_fundamental_form(K, z=None) -> np.ndarray:
    """``zeta(nabla_a bar-d^b)`` on the retained fields (equals ``-G/K`` when umbilic)."""
    s = GeometryState.coerce(K, z)
    s.require_adapted()
    E = s.E_jet
    m = s.n - 1
    return np.array([[s.zeta @ fiber_cov_deriv(s, E.value[a], E[b]) for b in range(m)] for a in range(m)])


def _curvature_parts(s: GeometryState):
    gam = -s.cartan_low  # [d, b, c] = Gamma^bc_d
    dgam = -momentum_gradient(s.cartan_low_jet, s.n).value  # [d, b, c, a] = d^a Gamma^bc_d
    return gam, dgam


def curvature_R_cc(s: GeometryState, X: np.ndarray) -> np.ndarray:
    """``R(X, C*)C*`` for the vertical vector ``X`` (lower components)."""
    gam, dgam = _curvature_parts(s)
    p = s.p
    t1 = np.einsum("dbca,a,b,c->d", dgam, X, p, p)
    t2 = np.einsum("dacb,a,b,c->d", dgam, X, p, p)
    t3 = np.einsum("ebc,dae,a,b,c->d", gam, gam, X, p, p)
    t4 = np.einsum("eac,dbe,a,b,c->d", gam, gam, X, p, p)
    return t1 - t2 + t3 - t4


def flat_section_residual(K, z=None, X=None) -> FiberCurvatureSlice:
    s = GeometryState.coerce(K, z)
    if X is None:
        X = np.eye(s.n)[0] - s.p * (s.zeta[0] / s.Kval)
    X = np.asarray(X, dtype=float)
    R = curvature_R_cc(s, X)
    num = float(R @ s.g_upper @ X)
    gam, dgam = _curvature_parts(s)
    size = (X @ s.g_upper @ X) * s.K2 * (np.abs(dgam).max() + np.abs(gam).max() ** 2)
    return FiberCurvatureSlice(R, num, normalized(abs(num), size))


def geodesic_rhs(K, x: np.ndarray, p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Acceleration ``dv_k/ds = C_k^ij v_i v_j`` of fiber geodesics at fixed ``x``."""
    from .cartan import PhasePoint, fundamental_tensors

    t = fundamental_tensors(K, PhasePoint(tuple(x), tuple(p)))
    c_low = np.einsum("ks,sij->kij", t.g_lower, t.cartan)
    return np.einsum("kij,i,j->k", c_low, v, v)
