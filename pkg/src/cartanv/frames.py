"""Canonical nonlinear connection, adapted frame, Sasaki lift and frame calculus.

Vector fields are jets of their ``2n`` natural components, so a field carries
its own first derivatives and brackets need no finite differences.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .cartan import normalized
from .jets import DerivSpec, Jet
from .state import GeometryState


@dataclass
class NonlinearConnection:
    N: np.ndarray
    dN_dp: np.ndarray  # [i, j, k] = dN_ij / dp_k
    dN_dx: np.ndarray  # [i, j, k] = dN_ij / dx^k
    delta_N: np.ndarray  # [i, j, k] = delta_i N_jk


@dataclass
class AdaptedFrame:
    frame: np.ndarray  # columns delta_1..delta_n, d/dp_1..d/dp_n
    coframe: np.ndarray  # rows dx^1..dx^n, delta p_1..delta p_n


@dataclass
class SasakiData:
    G_adapted: np.ndarray
    G_natural: np.ndarray
    J_adapted: np.ndarray
    J_natural: np.ndarray
    Omega_natural: np.ndarray


@dataclass
class FrameField:
    """A named vector field given by the jets of its natural components."""

    name: str
    components: Jet

    @property
    def value(self) -> np.ndarray:
        return self.components.value

    @classmethod
    def lift(cls, name: str, fn: Callable[[list], Sequence], z: Sequence[float], spec: DerivSpec) -> FrameField:
        """Lift a closure returning ``2n`` component expressions of the coordinates."""
        coords = jets.variables(spec, z)
        return cls(name, jets.stack(list(fn(coords))))


def _jet(field) -> Jet:
    return field.components if isinstance(field, FrameField) else field


# -- operations --------------------------------------------------------------------

def nonlinear_connection(K, z=None) -> NonlinearConnection:
    s = GeometryState.coerce(K, z)
    return NonlinearConnection(s.N, s.dN_dp, s.dN_dx, s.delta_N)


def adapted_frame(K, z=None) -> AdaptedFrame:
    s = GeometryState.coerce(K, z)
    return AdaptedFrame(s.frame_jet.value, s.coframe_jet.value)


def sasaki_structures(K, z=None) -> SasakiData:
    s = GeometryState.coerce(K, z)
    return SasakiData(s.G_adapted_jet.value, s.G, s.J_adapted_jet.value, s.J, s.Omega)


def lie_bracket(A, B) -> Jet:
    """Jet of ``[A, B]^k = A(B^k) - B(A^k)`` (one order lower than the inputs)."""
    a, b = _jet(A), _jet(B)
    if not isinstance(a, Jet):
        a = Jet.constant(b.space, a)
    if not isinstance(b, Jet):
        b = Jet.constant(a.space, b)
    return jets.directional_jet(b, a) - jets.directional_jet(a, b)


def lie_bracket_value(A, B) -> np.ndarray:
    return lie_bracket(A, B).value


def derivative_along(f: Jet, X) -> float | np.ndarray:
    """``X(f)`` at the base point for a jet-valued or numeric field ``X``."""
    x = _jet(X)
    return jets.directional(f, x.value if isinstance(x, Jet) else x)


def exterior_derivative_pointwise(form: Callable[..., Jet], fields: Sequence) -> float:
    """``d(form)`` on ``k + 1`` fields via the invariant formula.

    ``form`` takes ``k`` jet-valued fields and returns a scalar jet; ``k <= 2``.
    """
    fs = [_jet(f) for f in fields]
    k = len(fs) - 1
    if not 0 <= k <= 2:
        raise ValueError("exterior derivative is implemented for forms of degree 0..2")
    total = 0.0
    for i, X in enumerate(fs):
        rest = fs[:i] + fs[i + 1:]
        total += (-1) ** i * derivative_along(form(*rest), X)
    for i, j in itertools.combinations(range(len(fs)), 2):
        rest = [f for m, f in enumerate(fs) if m not in (i, j)]
        total += (-1) ** (i + j) * jets.value(form(lie_bracket(fs[i], fs[j]), *rest))
    return float(total)


def two_form(W: Jet) -> Callable[[Jet, Jet], Jet]:
    """The bilinear form ``(X, Y) -> X^T W Y`` with a jet-valued matrix ``W``."""
    def form(X, Y):
        return jets.einsum("i,i->", X, jets.einsum("ij,j->i", W, Y))
    return form


def adapted_fields(s: GeometryState) -> list[Jet]:
    """``delta_1..delta_n, d/dp_1..d/dp_n`` as jet fields."""
    vert = Jet.constant(s.delta_jet.space, s.vertical)
    return list(s.delta_jet) + list(vert)


# -- residual suites -----------------------------------------------------------------

def connection_residuals(K, z=None) -> dict[str, float]:
    """Symmetry and degree-1 homogeneity of ``N``."""
    s = GeometryState.coerce(K, z)
    N = s.N
    scale = np.abs(N).max()
    doubled = GeometryState(s.K, s.z.scaled(2.0), s.p_floor).N
    return {
        "symmetry": normalized(np.abs(N - N.T).max(), scale),
        "euler": normalized(np.abs(np.einsum("ijk,k->ij", s.dN_dp, s.p) - N).max(), scale),
        "rescale": normalized(np.abs(doubled - 2 * N).max(), 2 * scale),
    }


def frame_residuals(K, z=None) -> dict[str, float]:
    s = GeometryState.coerce(K, z)
    fr = adapted_frame(s)
    return {"duality": float(np.abs(fr.coframe @ fr.frame - np.eye(2 * s.n)).max()),
            "unimodular": abs(np.linalg.det(fr.frame) - 1.0)}


def sasaki_residuals(K, z=None, rng: np.random.Generator | None = None) -> dict[str, float]:
    """Almost-Kaehler compatibility of ``(G, J, Omega)``."""
    s = GeometryState.coerce(K, z)
    rng = rng or np.random.default_rng(0)
    G, J, W = s.G, s.J, s.Omega
    m = 2 * s.n
    F = s.frame_jet.value
    gj = J.T @ G
    X, Y = rng.normal(size=(2, m))
    std = np.zeros((m, m))
    std[s.n:, : s.n] = np.eye(s.n)
    std[: s.n, s.n:] = -np.eye(s.n)
    return {
        "j_squared": float(np.abs(J @ J + np.eye(m)).max()),
        "omega_compat": normalized(np.abs(F.T @ (W - gj) @ F).max(), np.abs(F.T @ W @ F).max()),
        "hermitian": normalized(abs((J @ X) @ G @ (J @ Y) - X @ G @ Y), abs(X @ G @ Y)),
        "g_symmetric": normalized(np.abs(G - G.T).max(), np.abs(G).max()),
        "g_positive": 0.0 if np.linalg.eigvalsh(0.5 * (G + G.T)).min() > 0 else 1.0,
        "omega_constant": float(np.abs(W - std).max()),
    }


def d_omega_residual(K, z=None) -> float:
    """``max |d Omega|`` over all triples of adapted frame fields."""
    s = GeometryState.coerce(K, z)
    form = two_form(s.Omega_jet)
    fields = adapted_fields(s)
    out = 0.0
    for trip in itertools.combinations(fields, 3):
        out = max(out, abs(exterior_derivative_pointwise(form, trip)))
    return out
