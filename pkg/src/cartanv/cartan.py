"""Cartan structures and their fundamental tensors.

The conventions are fixed once here and used everywhere else:

* phase coordinates are ordered ``z = (x_1..x_n, p_1..p_n)``;
* ``g^ij = 1/2 d^2 K^2 / dp_i dp_j`` is the fiber metric, ``g_ij`` its inverse;
* ``p^i = 1/2 dK^2/dp_i`` and ``C^ijk = -1/4 d^3 K^2 / dp_i dp_j dp_k``.

Most functions here are written once against :class:`~cartanv.jets.Jet` and
therefore work on any jet that carries enough derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import jets
from .errors import (
    DomainError,
    HomogeneityViolation,
    IllConditioned,
    NotPositiveDefinite,
)
from .jets import DerivSpec, Jet

COND_LIMIT = 1e10


@dataclass(frozen=True)
class PhasePoint:
    """A point ``(x, p)`` of the cotangent bundle with the zero section removed."""

    x: tuple[float, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if len(self.x) != len(self.p):
            raise ValueError("x and p must have the same length")
        if not any(self.p):
            raise DomainError("p must be nonzero")

    @classmethod
    def from_z(cls, z: Sequence[float]) -> PhasePoint:
        n = len(z) // 2
        return cls(tuple(z[:n]), tuple(z[n:]))

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def z(self) -> np.ndarray:
        return np.array(self.x + self.p)

    @property
    def p_norm(self) -> float:
        return float(np.linalg.norm(self.p))

    def scaled(self, lam: float) -> PhasePoint:
        """Same base point, momentum multiplied by ``lam``."""
        return PhasePoint(self.x, tuple(lam * v for v in self.p))

    def adapted_ok(self, p_floor: float) -> bool:
        return abs(self.p[-1]) >= p_floor * self.p_norm


@dataclass(frozen=True, eq=False)
class CartanStructure:
    """An evaluatable fundamental function.

    ``k_squared(x, p)`` receives two sequences whose entries are floats or jets and
    returns ``K^2``.  ``validity`` is an optional extra predicate (for instance a
    momentum cone) on top of ``K^2 > 0``.
    """

    dim: int
    k_squared: Callable[[Sequence[Any], Sequence[Any]], Any]
    label: str = "user"
    validity: Callable[[PhasePoint], bool] | None = None
    flags: dict = field(default_factory=dict)
    expression: str | None = None

    def k2_of_z(self, z: Sequence[Any]):
        return self.k_squared(list(z[: self.dim]), list(z[self.dim:]))

    def evaluate(self, point: PhasePoint) -> float:
        return float(self.k_squared(list(point.x), list(point.p)))

    def is_valid(self, point: PhasePoint) -> bool:
        if point.n != self.dim or not any(point.p):
            return False
        if self.validity is not None and not self.validity(point):
            return False
        try:
            return self.evaluate(point) > 0
        except (DomainError, ZeroDivisionError, ValueError):
            return False

    def lift(self, point: PhasePoint, spec: DerivSpec) -> Jet:
        if point.n != self.dim:
            raise ValueError("phase point dimension does not match the structure")
        return jets.lift(self.k2_of_z, point.z, spec)


@dataclass
class FundamentalTensors:
    g_upper: np.ndarray
    g_lower: np.ndarray
    p_upper: np.ndarray
    K2: float
    K: float
    cartan: np.ndarray


@dataclass
class ChristoffelData:
    gamma: np.ndarray  # gamma[i, j, k] = gamma^i_jk
    gamma0_jk: np.ndarray
    gamma0_h0: np.ndarray


# -- jet-generic building blocks ---------------------------------------------

def p_coords(n: int) -> range:
    return range(n, 2 * n)


def x_coords(n: int) -> range:
    return range(n)


def momentum_gradient(f: Jet, n: int) -> Jet:
    return jets.grad(f, p_coords(n))


def position_gradient(f: Jet, n: int) -> Jet:
    return jets.grad(f, x_coords(n))


def check_fiber_metric(g_upper: np.ndarray) -> None:
    """Cholesky and conditioning guard applied at every evaluated point."""
    if not np.all(np.isfinite(g_upper)):
        raise NotPositiveDefinite("fiber metric has non-finite entries")
    try:
        np.linalg.cholesky(g_upper)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("g^ij is not positive definite") from exc
    cond = np.linalg.cond(g_upper)
    if cond > COND_LIMIT:
        raise IllConditioned(f"g^ij condition number {cond:.3g} exceeds {COND_LIMIT:g}")


def christoffel(g_upper, dg_lower_dx):
    """``gamma^i_jk = 1/2 g^is (d_k g_js + d_j g_sk - d_s g_jk)``.

    ``dg_lower_dx[a, b, c]`` is ``d g_ab / d x^c``; works for arrays or jets.
    """
    d = 0.5 * (dg_lower_dx + dg_lower_dx.transpose(1, 0, 2))  # exact symmetry in (a, b)
    bracket = d.transpose(0, 2, 1) + d.transpose(2, 1, 0) - d
    return 0.5 * jets.einsum("is,jks->ijk", g_upper, bracket)


def canonical_n(gamma, p_lower, p_upper, dg_lower_dp):
    """Canonical nonlinear connection from the formal Christoffel symbols."""
    gamma0 = jets.einsum("ijk,i->jk", gamma, p_lower)
    gamma0_h0 = jets.einsum("hk,k->h", gamma0, p_upper)
    return gamma0 - 0.5 * jets.einsum("h,ijh->ij", gamma0_h0, dg_lower_dp), gamma0, gamma0_h0


def normalized(residual: float, magnitude: float) -> float:
    """Residuals are reported relative to ``1 + |terms compared|``."""
    return float(residual) / (1.0 + float(magnitude))


# -- operations ----------------------------------------------------------------

def _fiber_jet(K: CartanStructure, z: PhasePoint, p_order: int) -> Jet:
    return K.lift(z, DerivSpec(K.dim, p_order=p_order))


def fundamental_tensors(K: CartanStructure, z: PhasePoint) -> FundamentalTensors:
    """``g^ij``, ``g_ij``, ``p^i``, ``K^2``, ``K`` and ``C^ijk`` at ``z``."""
    n = K.dim
    k2 = _fiber_jet(K, z, 3)
    if not k2.value > 0:
        raise DomainError("K^2 must be positive")
    p_up = 0.5 * momentum_gradient(k2, n)
    g_up = momentum_gradient(p_up, n)
    cartan = -0.5 * momentum_gradient(g_up, n)
    gu = g_up.value
    gu = 0.5 * (gu + gu.T)
    check_fiber_metric(gu)
    return FundamentalTensors(
        g_upper=gu,
        g_lower=np.linalg.inv(gu),
        p_upper=p_up.value,
        K2=k2.value,
        K=float(np.sqrt(k2.value)),
        cartan=cartan.value,
    )


def formal_christoffel(K: CartanStructure, z: PhasePoint) -> ChristoffelData:
    """Formal Christoffel symbols and their momentum contractions.

    Position derivatives of ``g_ij`` come from ``d(g^-1) = -g^-1 (d g) g^-1``
    applied at the base point.
    """
    n = K.dim
    k2 = K.lift(z, DerivSpec(n, p_order=2, x_order=1))
    g_up_jet = momentum_gradient(momentum_gradient(0.5 * k2, n), n)
    gu = g_up_jet.value
    check_fiber_metric(gu)
    gl = np.linalg.inv(gu)
    dgu_dx = position_gradient(g_up_jet, n).value
    dgl_dx = -np.einsum("ia,abk,bj->ijk", gl, dgu_dx, gl)
    gamma = christoffel(gu, dgl_dx)
    p = np.array(z.p)
    p_up = gu @ p
    gamma0 = np.einsum("ijk,i->jk", gamma, p)
    return ChristoffelData(gamma=gamma, gamma0_jk=gamma0, gamma0_h0=gamma0 @ p_up)


def homogeneity_certificate(
    K: CartanStructure, z: PhasePoint, tol: float = 1e-10
) -> dict[str, float]:
    """Euler residuals certifying the homogeneity degrees of ``K^2``, ``g^ij``, ``N_ij``.

    Raises :class:`HomogeneityViolation` as soon as one exceeds ``tol``; the
    ``K^2`` test runs first so a malformed function is reported before any
    positive-definiteness failure it may also cause.
    """
    from .state import GeometryState

    n = K.dim
    p = np.array(z.p)
    k2 = _fiber_jet(K, z, 1)
    dk2 = momentum_gradient(k2, n).value
    out = {"euler_k2": normalized(abs(p @ dk2 - 2 * k2.value), 2 * abs(k2.value))}
    if out["euler_k2"] > tol:
        raise HomogeneityViolation(
            f"p_i dK^2/dp_i - 2K^2 residual {out['euler_k2']:.3g} at {z}"
        )
    state = GeometryState(K, z)
    dg = state.g_upper_jet_dp.value
    out["euler_g"] = normalized(np.abs(np.einsum("ijk,k->ij", dg, p)).max(),
                                np.abs(dg).max() * np.abs(p).max())
    N = state.N
    dN = state.dN_dp
    out["euler_n"] = normalized(np.abs(np.einsum("ijk,k->ij", dN, p) - N).max(), np.abs(N).max())
    for name in ("euler_g", "euler_n"):
        if out[name] > tol:
            raise HomogeneityViolation(f"{name} residual {out[name]:.3g} at {z}")
    return out


def identity_residuals(t: FundamentalTensors, p: np.ndarray) -> dict[str, float]:
    """Normalized residuals of the algebraic identities homogeneity implies."""
    cnorm = float(np.abs(t.cartan).max())
    contractions = [
        np.einsum("ijk,k->ij", t.cartan, p),
        np.einsum("ikj,k->ij", t.cartan, p),
        np.einsum("kij,k->ij", t.cartan, p),
    ]
    return {
        "p_upper": normalized(np.abs(t.g_upper @ p - t.p_upper).max(), np.linalg.norm(t.p_upper)),
        "p_lower": normalized(np.abs(t.g_lower @ t.p_upper - p).max(), np.linalg.norm(p)),
        "k2": normalized(abs(p @ t.p_upper - t.K2), t.K2),
        "cartan": normalized(max(np.abs(c).max() for c in contractions), cnorm),
        "inverse": float(np.abs(t.g_upper @ t.g_lower - np.eye(len(p))).max())
        / np.linalg.cond(t.g_upper),
    }
