"""All tensors and frame fields at one phase point, computed once and cached.

Everything is derived from a single jet of ``K^2`` carrying position derivatives
up to order 2, momentum derivatives up to order 4 and total order 5.  Each
derived quantity is itself a jet, so fields built from it (frames, Liouville
fields, the Sasaki metric) can be differentiated again for brackets and
covariant derivatives.  Orders drop as derivatives are taken:

==============  =====================
quantity        (x, p, total) orders
==============  =====================
``K^2``         (2, 4, 5)
``p^i``         (2, 3, 4)
``g^ij, g_ij``  (2, 2, 3)
``C^ijk``       (2, 1, 2)
``N_ij``        (1, 1, 2)
==============  =====================

Vectors on phase space are ``2n`` arrays of natural components along
``(d/dx^1..d/dx^n, d/dp_1..d/dp_n)``.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from . import jets
from .cartan import (
    CartanStructure,
    PhasePoint,
    canonical_n,
    check_fiber_metric,
    christoffel,
    momentum_gradient,
    position_gradient,
)
from .errors import AdaptedBasisDegenerate, DomainError
from .jets import DerivSpec, Jet

P_FLOOR = 0.05


class GeometryState:
    """Lazily evaluated geometry of ``K`` at ``z``.

    ``orders`` overrides the ``(x, p, total)`` orders of the ``K^2`` jet; lower
    orders are enough (and much cheaper) when only ``N`` and ``g`` are needed.
    """

    def __init__(self, K: CartanStructure, z: PhasePoint, p_floor: float = P_FLOOR,
                 orders: tuple[int, int, int] = (2, 4, 5)):
        if z.n != K.dim:
            raise ValueError("phase point dimension does not match the structure")
        if K.validity is not None and not K.validity(z):
            raise DomainError(f"{z} lies outside the validity domain of {K.label}")
        self.K = K
        self.z = z
        self.n = K.dim
        self.p_floor = p_floor
        self.orders = orders

    @classmethod
    def coerce(cls, K, z=None) -> GeometryState:
        """Accept either a ready state or a ``(structure, point)`` pair."""
        if isinstance(K, cls):
            return K
        return cls(K, z)

    # -- core jets -------------------------------------------------------------
    @cached_property
    def spec(self) -> DerivSpec:
        x, p, total = self.orders
        return DerivSpec(self.n, p_order=p, x_order=x, total_order=total)

    @cached_property
    def coords(self) -> list[Jet]:
        return jets.variables(self.spec, self.z.z)

    @cached_property
    def k2_jet(self) -> Jet:
        k2 = self.K.k2_of_z(self.coords)
        if not isinstance(k2, Jet):
            k2 = Jet.constant(self.spec.space(), k2)
        if not k2.value > 0:
            raise DomainError("K^2 must be positive")
        return k2

    @cached_property
    def K_jet(self) -> Jet:
        return self.k2_jet.sqrt()

    @cached_property
    def p_jet(self) -> Jet:
        return jets.stack(self.coords[self.n:])

    @cached_property
    def p_upper_jet(self) -> Jet:
        return 0.5 * momentum_gradient(self.k2_jet, self.n)

    @cached_property
    def g_upper_jet(self) -> Jet:
        g = momentum_gradient(self.p_upper_jet, self.n)
        g = 0.5 * (g + g.T)
        check_fiber_metric(g.value)
        return g

    @cached_property
    def g_upper_jet_dp(self) -> Jet:
        return momentum_gradient(self.g_upper_jet, self.n)

    @cached_property
    def cartan_jet(self) -> Jet:
        return -0.5 * self.g_upper_jet_dp

    @cached_property
    def g_lower_jet(self) -> Jet:
        g = jets.inv(self.g_upper_jet, np.linalg.inv(self.g_upper_jet.value))
        return 0.5 * (g + g.T)

    @cached_property
    def dg_lower_dx_jet(self) -> Jet:
        return position_gradient(self.g_lower_jet, self.n)

    @cached_property
    def dg_lower_dp_jet(self) -> Jet:
        return momentum_gradient(self.g_lower_jet, self.n)

    @cached_property
    def gamma_jet(self) -> Jet:
        return christoffel(self.g_upper_jet, self.dg_lower_dx_jet)

    @cached_property
    def _n_parts(self):
        return canonical_n(self.gamma_jet, self.p_jet, self.p_upper_jet, self.dg_lower_dp_jet)

    @cached_property
    def N_jet(self) -> Jet:
        return self._n_parts[0]

    @cached_property
    def cartan_low_jet(self) -> Jet:
        """``C_i^jk = g_is C^sjk``."""
        return jets.einsum("is,sjk->ijk", self.g_lower_jet, self.cartan_jet)

    # -- plain values ------------------------------------------------------------
    @cached_property
    def p(self) -> np.ndarray:
        return np.array(self.z.p)

    @property
    def K2(self) -> float:
        return self.k2_jet.value

    @property
    def Kval(self) -> float:
        return self.K_jet.value

    @cached_property
    def g_upper(self) -> np.ndarray:
        return self.g_upper_jet.value

    @cached_property
    def g_lower(self) -> np.ndarray:
        return self.g_lower_jet.value

    @cached_property
    def p_upper(self) -> np.ndarray:
        return self.p_upper_jet.value

    @cached_property
    def cartan(self) -> np.ndarray:
        return self.cartan_jet.value

    @cached_property
    def cartan_low(self) -> np.ndarray:
        return self.cartan_low_jet.value

    @cached_property
    def gamma(self) -> np.ndarray:
        return self.gamma_jet.value

    @cached_property
    def N(self) -> np.ndarray:
        return self.N_jet.value

    @cached_property
    def dN_dp(self) -> np.ndarray:
        """``dN_dp[i, j, k] = dN_ij / dp_k``."""
        return momentum_gradient(self.N_jet, self.n).value

    @cached_property
    def dN_dx(self) -> np.ndarray:
        return position_gradient(self.N_jet, self.n).value

    @cached_property
    def delta_N(self) -> np.ndarray:
        """``delta_N[i, j, k] = delta_i N_jk``."""
        return np.einsum("jki->ijk", self.dN_dx) + np.einsum("im,jkm->ijk", self.N, self.dN_dp)

    @cached_property
    def t(self) -> np.ndarray:
        return self.t_jet.value

    @cached_property
    def zeta(self) -> np.ndarray:
        return self.p_upper / self.Kval

    # -- frame jets ------------------------------------------------------------------
    @cached_property
    def eye(self) -> np.ndarray:
        return np.eye(self.n)

    @cached_property
    def zeros(self) -> np.ndarray:
        return np.zeros((self.n, self.n))

    @cached_property
    def delta_jet(self) -> Jet:
        """Rows are the horizontal fields ``delta_i = d/dx^i + N_ij d/dp_j``."""
        return jets.concatenate([self.eye, self.N_jet], axis=-1)

    @cached_property
    def vertical(self) -> np.ndarray:
        """Rows are the coordinate fields ``d/dp_i``."""
        return np.hstack([self.zeros, self.eye])

    @cached_property
    def frame_jet(self) -> Jet:
        """Columns are ``delta_1..delta_n, d/dp_1..d/dp_n``."""
        return jets.block([[self.eye, self.zeros], [self.N_jet.T, self.eye]])

    @cached_property
    def coframe_jet(self) -> Jet:
        """Rows are ``dx^i`` and ``delta p_i = dp_i - N_ji dx^j``."""
        return jets.block([[self.eye, self.zeros], [-self.N_jet.T, self.eye]])

    @cached_property
    def G_adapted_jet(self) -> Jet:
        return jets.block([[self.g_lower_jet, self.zeros], [self.zeros, self.g_upper_jet]])

    @cached_property
    def J_adapted_jet(self) -> Jet:
        return jets.block([[self.zeros, self.g_upper_jet], [-self.g_lower_jet, self.zeros]])

    @cached_property
    def G_jet(self) -> Jet:
        th = self.coframe_jet
        return jets.einsum("ki,kl->il", th, jets.einsum("kj,jl->kl", self.G_adapted_jet, th))

    @cached_property
    def J_jet(self) -> Jet:
        return jets.einsum(
            "ij,jl->il", self.frame_jet, jets.einsum("jk,kl->jl", self.J_adapted_jet, self.coframe_jet)
        )

    @cached_property
    def Omega_jet(self) -> Jet:
        """``delta p_i ^ dx^i`` as a matrix ``W`` with ``Omega(X, Y) = X^T W Y``."""
        th = self.coframe_jet
        dx, dp = th[: self.n], th[self.n:]
        wedge = jets.einsum("ki,kl->il", dp, dx)
        return wedge - wedge.T

    @cached_property
    def G(self) -> np.ndarray:
        return self.G_jet.value

    @cached_property
    def J(self) -> np.ndarray:
        return self.J_jet.value

    @cached_property
    def Omega(self) -> np.ndarray:
        return self.Omega_jet.value

    def metric(self, X, Y) -> float:
        return float(np.asarray(X) @ self.G @ np.asarray(Y))

    def metric_jet(self, X, Y) -> Jet:
        return jets.einsum("i,i->", X, jets.einsum("ij,j->i", self.G_jet, Y))

    # -- Liouville jets --------------------------------------------------------------
    @cached_property
    def C_star_jet(self) -> Jet:
        return jets.concatenate([np.zeros(self.n), self.p_jet])

    @cached_property
    def xi_star_jet(self) -> Jet:
        return jets.einsum("i,ik->k", self.p_upper_jet, self.delta_jet)

    @cached_property
    def t_jet(self) -> Jet:
        return self.p_upper_jet / self.k2_jet

    @cached_property
    def zeta_jet(self) -> Jet:
        return self.p_upper_jet / self.K_jet

    @cached_property
    def E_jet(self) -> Jet:
        """``E[j, i]``: components of ``bar-d^j`` along ``d/dp_i``."""
        return self.eye - jets.einsum("j,i->ji", self.t_jet, self.p_jet)

    @cached_property
    def bar_jet(self) -> Jet:
        """Rows are the fields ``bar-d^j = d/dp_j - t^j C*`` in natural components."""
        return jets.concatenate([self.zeros, self.E_jet], axis=-1)

    @cached_property
    def Xbar_jet(self) -> Jet:
        """Rows are ``J(bar-d^j)``."""
        return jets.einsum("kl,al->ak", self.J_jet, self.bar_jet)

    def require_adapted(self) -> None:
        if not self.z.adapted_ok(self.p_floor):
            raise AdaptedBasisDegenerate(
                f"|p_n| = {abs(self.z.p[-1]):.3g} is below {self.p_floor} * |p|"
            )

    # -- decompositions ----------------------------------------------------------------
    def adapted_components(self, X: np.ndarray):
        """Split a natural vector into ``(h, v)`` with ``X = h^i delta_i + v_i d/dp_i``."""
        h = X[: self.n]
        return h, X[self.n:] - self.N.T @ h

    def liouville_components(self, X: np.ndarray):
        """``X = h^i delta_i + y_a bar-d^a + f C*`` with ``a`` over the retained indices."""
        self.require_adapted()
        h, v = self.adapted_components(X)
        f = float(v @ self.t)
        y = v[:-1] - v[-1] * self.p[:-1] / self.p[-1]
        return h, y, f
