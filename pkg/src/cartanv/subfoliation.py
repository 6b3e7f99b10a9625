"""Basic connections of the vertical / Liouville subfoliation.

Fields are jets of natural components.  They are split into adapted components
``W = h^i delta_i + y_a bar-d^a + f C*`` at the jet level, so derivatives of the
components come out of the same arithmetic that builds them.  The three
connections are

* ``nabla_h``: the horizontal restriction of the Vranceanu connection,
  ``X(h^i) delta_i + h^i X_h^j H^k_ij delta_k``;
* ``nabla_v``: the Vaisman connection on the vertical bundle;
* ``nabla_perp``: their direct sum on the orthogonal complement of ``C*``.

The quotient bundles are realised as ``G``-orthogonal complements with
projectors ``pi0`` (onto the Liouville distribution), ``pi1`` (horizontal) and
``pi2`` (orthogonal complement of ``C*``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .cartan import normalized
from .connections import VaismanConnection, canonical_h_coeffs, vaisman
from .frames import lie_bracket, lie_bracket_value
from .jets import Jet
from .state import GeometryState


@dataclass
class Adapted:
    """Adapted components ``(h, y, f)`` of a field; entries are jets or arrays."""

    h: object
    y: object
    f: object


@dataclass
class BasicConnectionTriple:
    state: GeometryState
    H: np.ndarray
    vc: VaismanConnection

    @property
    def n(self) -> int:
        return self.state.n

    # -- decompositions -------------------------------------------------------------
    def decompose(self, W: Jet) -> Adapted:
        s = self.state
        h = W[: s.n]
        v = W[s.n:] - jets.einsum("ji,j->i", s.N_jet, h)
        ratio = s.p_jet[:-1] / s.p_jet[-1]
        y = v[:-1] - ratio * v[-1]
        f = jets.einsum("i,i->", v, s.t_jet)
        return Adapted(h, y, f)

    def assemble(self, a: Adapted) -> np.ndarray:
        """Natural components at the base point."""
        s = self.state
        m = s.n - 1
        h, y, f = (jets.value(c) for c in (a.h, a.y, a.f))
        return (
            np.asarray(h) @ s.delta_jet.value
            + np.asarray(y) @ s.bar_jet.value[:m]
            + float(f) * s.C_star_jet.value
        )

    def assemble_jet(self, h, y, f) -> Jet:
        s = self.state
        m = s.n - 1
        out = jets.einsum("i,ik->k", h, s.delta_jet) + jets.einsum("a,ak->k", y, s.bar_jet[:m])
        return out + f * s.C_star_jet

    # -- connections (X numeric natural vector, Y a natural jet field) ---------------
    def split_direction(self, X: np.ndarray):
        return self.state.liouville_components(np.asarray(X, dtype=float))

    def nabla_h(self, X: np.ndarray, Y: Jet) -> np.ndarray:
        a = self.decompose(Y)
        Xh, _, _ = self.split_direction(X)
        hv = a.h.value
        out = jets.directional(a.h, X) + np.einsum("kij,i,j->k", self.H, hv, Xh)
        return out @ self.state.delta_jet.value

    def nabla_v(self, X: np.ndarray, Y: Jet) -> np.ndarray:
        s = self.state
        m = s.n - 1
        a = self.decompose(Y)
        Xh, Xy, x0 = self.split_direction(X)
        y = a.y.value
        f = a.f.value
        vc = self.vc
        coeff = (
            np.einsum("abc,b->ac", vc.s_coeff, Xy)
            + x0 * vc.s_mixed
            + np.einsum("aci,i->ac", vc.beta, Xh)
        )
        y_out = jets.directional(a.y, X) + y @ coeff
        f_out = jets.directional(a.f, X) + f * (x0 * vc.s_scalar + Xy @ vc.s_vector + Xh @ vc.beta_scalar)
        return y_out @ s.bar_jet.value[:m] + f_out * s.C_star_jet.value

    def nabla_perp(self, X: np.ndarray, Y: Jet) -> np.ndarray:
        """Direct sum on the complement of ``C*``; the ``C*`` part of ``Y`` is discarded."""
        s = self.state
        m = s.n - 1
        a = self.decompose(Y)
        horizontal = jets.einsum("i,ik->k", a.h, s.delta_jet)
        liouville = jets.einsum("a,ak->k", a.y, s.bar_jet[:m])
        return self.nabla_h(X, horizontal) + self.nabla_v(X, liouville)

    # -- projectors on numeric natural vectors ----------------------------------------------
    def pi0(self, W: np.ndarray) -> np.ndarray:
        _, y, _ = self.split_direction(W)
        return y @ self.state.bar_jet.value[: self.n - 1]

    def pi1(self, W: np.ndarray) -> np.ndarray:
        return W[: self.n] @ self.state.delta_jet.value

    def pi2(self, W: np.ndarray) -> np.ndarray:
        s = self.state
        C = s.C_star_jet.value
        return W - s.metric(W, C) / s.K2 * C


def basic_triple(K, z=None) -> BasicConnectionTriple:
    s = GeometryState.coerce(K, z)
    s.require_adapted()
    return BasicConnectionTriple(s, canonical_h_coeffs(s), vaisman(s))


# -- random test fields ----------------------------------------------------------------

def random_polynomial(s: GeometryState, rng: np.random.Generator, shape=(), variables=None) -> Jet:
    """Random polynomial of degree <= 2 in the chosen phase coordinates (default: all)."""
    zj = jets.stack(s.coords)
    idx = list(range(2 * s.n)) if variables is None else list(variables)
    sub = jets.stack([zj[k] for k in idx])
    k = len(idx)
    c = rng.normal(size=shape)
    b = rng.normal(size=shape + (k,)) * 0.5
    A = rng.normal(size=shape + (k, k)) * 0.25
    lin = jets.einsum("...k,k->...", b, sub) if shape else jets.einsum("k,k->", b, sub)
    quad = jets.einsum("...l,l->...", jets.einsum("...kl,k->...l", A, sub), sub) if shape else \
        jets.einsum("l,l->", jets.einsum("kl,k->l", A, sub), sub)
    return quad + lin + c


def _scale(*vs) -> float:
    return max(float(np.abs(v).max()) for v in vs)


# -- checks --------------------------------------------------------------------------------------

def basic_check_L(K, z=None, rng: np.random.Generator | None = None) -> dict[str, float]:
    tri = basic_triple(K, z)
    s = tri.state
    rng = rng or np.random.default_rng(3)
    m = s.n - 1
    C = s.C_star_jet.value
    bars = s.bar_jet.value
    out = {}
    table = 0.0
    for a in range(m):
        unit = Jet.constant(s.bar_jet.space, np.eye(m)[a])
        got = tri.nabla_v(C, tri.assemble_jet(np.zeros(s.n), unit, 0.0))
        table = max(table, normalized(np.abs(got + bars[a]).max(), np.abs(bars[a]).max()))
    out["table"] = table

    fx = random_polynomial(s, rng, variables=range(s.n))
    Z = tri.assemble_jet(np.zeros(s.n), s.p_jet[:m] * fx, 0.0)
    got = tri.nabla_v(C, Z)
    br = lie_bracket_value(s.C_star_jet, Z)
    out["field"] = normalized(np.abs(got - br).max(), _scale(got, br))

    Zr = tri.assemble_jet(np.zeros(s.n), random_polynomial(s, rng, (m,)), 0.0)
    got = tri.nabla_v(C, Zr)
    br = lie_bracket_value(s.C_star_jet, Zr)
    out["field_generic"] = normalized(np.abs(got - br).max(), _scale(got, br))

    a_fn = random_polynomial(s, rng)
    lhs = tri.pi0(lie_bracket_value(a_fn * s.C_star_jet, Zr))
    rhs = a_fn.value * tri.pi0(br)
    out["scaling"] = normalized(np.abs(lhs - rhs).max(), _scale(lhs, rhs))
    return out


def basic_check_H(K, z=None, rng: np.random.Generator | None = None) -> dict[str, float]:
    tri = basic_triple(K, z)
    s = tri.state
    n = s.n
    rng = rng or np.random.default_rng(4)
    deltas = list(s.delta_jet)
    vert = s.vertical
    out = {}
    table = 0.0
    for j in range(n):
        for i in range(n):
            table = max(table, np.abs(tri.nabla_h(vert[j], deltas[i])).max())
    out["table"] = table

    Xv = jets.concatenate([np.zeros(n), random_polynomial(s, rng, (n,))])
    Yh = random_polynomial(s, rng, (n,))
    Ytilde = jets.einsum("i,ik->k", Yh, s.delta_jet) + jets.concatenate(
        [np.zeros(n), random_polynomial(s, rng, (n,))]
    )
    Ypure = jets.einsum("i,ik->k", Yh, s.delta_jet)
    got = tri.nabla_h(Xv.value, Ypure)
    br = tri.pi1(lie_bracket_value(Xv, Ytilde))
    out["field"] = normalized(np.abs(got - br).max(), _scale(got, br))

    vertical_only = jets.concatenate([np.zeros(n), random_polynomial(s, rng, (n,))])
    out["vertical_only"] = float(np.abs(tri.pi1(lie_bracket_value(Xv, vertical_only))).max())

    pv = 0.0
    dpj = Jet.constant(s.delta_jet.space, vert)
    for j in range(n):
        for i in range(n):
            pv = max(pv, np.abs(tri.pi1(lie_bracket_value(dpj[j], deltas[i]))).max())
    out["vertical_bracket"] = pv
    return out


def basic_check_perp(K, z=None, rng: np.random.Generator | None = None) -> dict[str, float]:
    tri = basic_triple(K, z)
    s = tri.state
    n, m = s.n, s.n - 1
    rng = rng or np.random.default_rng(5)
    C = s.C_star_jet.value
    bars = s.bar_jet.value
    deltas = list(s.delta_jet)
    out = {}
    out["delta"] = max(np.abs(tri.nabla_perp(C, d)).max() for d in deltas)
    tb = 0.0
    for a in range(m):
        unit = Jet.constant(s.bar_jet.space, np.eye(m)[a])
        got = tri.nabla_perp(C, tri.assemble_jet(np.zeros(n), unit, 0.0))
        tb = max(tb, normalized(np.abs(got + bars[a]).max(), np.abs(bars[a]).max()))
    out["bar"] = tb
    out["homogeneity"] = normalized(np.abs(s.dN_dp @ s.p - s.N).max(), np.abs(s.N).max())

    h, y = random_polynomial(s, rng, (n,)), random_polynomial(s, rng, (m,))
    Y = tri.assemble_jet(h, y, 0.0)
    Ytilde = Y + random_polynomial(s, rng) * s.C_star_jet
    a_fn = random_polynomial(s, rng)
    lhs = tri.pi2(lie_bracket_value(a_fn * s.C_star_jet, Ytilde))
    rhs = tri.nabla_perp(a_fn.value * C, Y)
    out["field"] = normalized(np.abs(lhs - rhs).max(), _scale(lhs, rhs))
    return out


def triple_compatibility(K, z=None, rng: np.random.Generator | None = None) -> dict[str, float]:
    tri = basic_triple(K, z)
    s = tri.state
    n, m = s.n, s.n - 1
    rng = rng or np.random.default_rng(6)
    out = {"inclusion": 0.0, "projection": 0.0, "preserve": 0.0}
    directions = [rng.normal(size=2 * n), s.C_star_jet.value]
    YL = tri.assemble_jet(np.zeros(n), random_polynomial(s, rng, (m,)), 0.0)
    h = random_polynomial(s, rng, (n,))
    Zmix = tri.assemble_jet(h, random_polynomial(s, rng, (m,)), 0.0)
    Zh = jets.einsum("i,ik->k", h, s.delta_jet)
    for X in directions:
        a = tri.nabla_v(X, YL)
        b = tri.nabla_perp(X, YL)
        out["inclusion"] = max(out["inclusion"], normalized(np.abs(a - b).max(), _scale(a, b)))
        lhs = tri.pi1(tri.nabla_perp(X, Zmix))
        rhs = tri.nabla_h(X, Zh)
        out["projection"] = max(out["projection"], normalized(np.abs(lhs - rhs).max(), _scale(lhs, rhs)))
        C = s.C_star_jet.value
        for w in (tri.nabla_perp(X, Zmix), tri.nabla_v(X, YL)):
            out["preserve"] = max(out["preserve"], abs(s.metric(w, C)) / (1 + np.abs(w).max() * s.Kval))
        w = tri.nabla_v(X, YL)
        out["preserve"] = max(out["preserve"], float(np.abs(w[:n]).max()))
        w = tri.nabla_h(X, Zh)
        out["preserve"] = max(out["preserve"], float(np.abs(s.adapted_components(w)[1]).max()))
    return out


def adapted_triple(K, z=None) -> dict[str, float]:
    """Conjunction of the four basic-connection certificates (largest residual of each)."""
    s = GeometryState.coerce(K, z)
    return {
        "L": max(basic_check_L(s).values()),
        "H": max(basic_check_H(s).values()),
        "perp": max(basic_check_perp(s).values()),
        "triple": max(triple_compatibility(s).values()),
    }


def line_curvature_check(K, z=None, rng: np.random.Generator | None = None, constant: bool = False,
                         W: Adapted | None = None) -> float:
    """``R(aC*, bC*)W`` for random functions ``a, b`` and ``W`` orthogonal to ``C*``.

    Along ``C*`` the connection acts on adapted components as
    ``D(h, y) = (C*(h), C*(y) - y)``; nested derivatives come from the jets.
    """
    tri = basic_triple(K, z)
    s = tri.state
    n, m = s.n, s.n - 1
    rng = rng or np.random.default_rng(7)
    Cj = s.C_star_jet
    if constant:
        a_fn = Jet.constant(s.k2_jet.space, 1.0)
        b_fn = Jet.constant(s.k2_jet.space, 1.0)
    else:
        a_fn, b_fn = random_polynomial(s, rng), random_polynomial(s, rng)
    if W is None:
        W = Adapted(random_polynomial(s, rng, (n,)), random_polynomial(s, rng, (m,)), 0.0)

    def D(w: Adapted) -> Adapted:
        return Adapted(jets.directional_jet(w.h, Cj), jets.directional_jet(w.y, Cj) - w.y, 0.0)

    def along(c: Jet, w: Adapted) -> Adapted:
        d = D(w)
        return Adapted(c * d.h, c * d.y, 0.0)

    def value(w: Adapted) -> np.ndarray:
        return tri.assemble(Adapted(w.h.value, w.y.value, 0.0))

    bracket = lie_bracket(a_fn * Cj, b_fn * Cj)
    c_fn = tri.decompose(bracket).f
    first = value(along(a_fn, along(b_fn, W)))
    second = value(along(b_fn, along(a_fn, W)))
    third = value(along(c_fn, W))
    res = first - second - third
    return normalized(np.abs(res).max(), _scale(first, second, third))
