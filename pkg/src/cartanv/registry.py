"""Static table of checks: name, anchor, tolerance kind and pointwise residual.

Each residual function receives a :class:`PointContext` and returns one
nonnegative float; the harness takes the maximum over sample points.  Anchor
strings live in the packaged ``data/anchors.json``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable

import numpy as np

from . import connections, fiber, frames, indicatrix, liouville, subfoliation
from .cartan import (
    CartanStructure,
    PhasePoint,
    formal_christoffel,
    fundamental_tensors,
    homogeneity_certificate,
    identity_residuals,
    normalized,
)
from .metrics import MetricDescriptor
from .oracle import FDOracle, oracle_tensors
from .state import GeometryState

MINIMALITY_TOL = 1e-6
NU_TOL = 1e-8
CLOSED_TOL = 1e-8
LINE_CURVATURE_TOL = 1e-10
UNIQUENESS_TOL = 1.0
EXACT_ZERO_TOL = 1e-12


@dataclass
class PointContext:
    descriptor: MetricDescriptor
    point: PhasePoint
    index: int
    seed: int
    cache: dict = field(default_factory=dict)

    @property
    def structure(self) -> CartanStructure:
        return self.descriptor.structure

    @property
    def state(self) -> GeometryState:
        if "state" not in self.cache:
            self.cache["state"] = GeometryState(self.structure, self.point)
        return self.cache["state"]

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.index, salt])

    def memo(self, key: str, fn: Callable[[], object]):
        if key not in self.cache:
            self.cache[key] = fn()
        return self.cache[key]


@dataclass(frozen=True)
class Check:
    name: str
    tolerance: str | float  # "ad", "fd", "curv" or a fixed value
    residual: Callable[[PointContext], float]
    applies: Callable[[MetricDescriptor], bool] = lambda d: True
    description: str = ""

    @property
    def anchor(self) -> str:
        return anchors()["checks"][self.name]

    def tolerance_value(self, tolerances: dict[str, float]) -> float:
        return tolerances[self.tolerance] if isinstance(self.tolerance, str) else float(self.tolerance)


@lru_cache(maxsize=1)
def anchors() -> dict:
    text = resources.files("cartanv").joinpath("data/anchors.json").read_text(encoding="utf-8")
    return json.loads(text)


_RANGE = re.compile(r"^(Eqs?|Props?|Thm|Lemma|Rem)\s+(.*)$")


def expand_anchor(anchor: str) -> set[str]:
    """Individual anchors named by a compound string such as ``"Eqs 9.1-9.5, 9.8 / Prop 9.2"``."""
    out: set[str] = set()
    for part in anchor.split(" / "):
        part = re.sub(r"\s*\(FD oracle\)$", "", part.strip())
        m = _RANGE.match(part)
        if not m:
            out.add(part)
            continue
        kind = m.group(1).rstrip("s") if m.group(1) in ("Eqs", "Props") else m.group(1)
        for item in m.group(2).split(","):
            item = re.sub(r"\(.*$", "", item.strip())
            if "-" in item:
                lo, hi = item.split("-")
                major, a = lo.split(".")
                _, b = hi.split(".")
                out.update(f"{kind} {major}.{k}" for k in range(int(a), int(b) + 1))
            else:
                out.add(f"{kind} {item}")
    return out


# -- residual helpers ---------------------------------------------------------------

def _max(record: dict) -> float:
    return float(max(record.values())) if record else 0.0


def _oracle_for(ctx: PointContext):
    K = ctx.structure
    valid = (lambda z: K.is_valid(PhasePoint.from_z(z)))
    return FDOracle(), valid


def _oracle_tensors(ctx: PointContext) -> float:
    s = ctx.state
    oracle, valid = _oracle_for(ctx)
    o = oracle_tensors(lambda z: float(ctx.structure.k2_of_z(z)), s.z.z, s.n, oracle, valid)
    res = [
        normalized(np.abs(o.g_upper - s.g_upper).max(), np.abs(s.g_upper).max()),
        normalized(np.abs(o.cartan - s.cartan).max(), np.abs(s.cartan).max()),
        normalized(np.abs(o.N - s.N).max(), np.abs(s.N).max()),
    ]
    return max(res)


def _mixed_path(ctx: PointContext, quantity: Callable[[GeometryState], np.ndarray], jet_value: np.ndarray,
                orders: tuple[int, int, int] = (1, 3, 4)) -> float:
    """FD (first order, in the momenta) of a jet-computed quantity against its jet derivative."""
    s = ctx.state
    oracle, valid = _oracle_for(ctx)
    n = s.n
    got = np.empty_like(jet_value)
    base = s.z.z
    seen: dict[tuple, np.ndarray] = {}

    def at(z: np.ndarray) -> np.ndarray:
        key = tuple(z)
        if key not in seen:
            seen[key] = quantity(GeometryState(ctx.structure, PhasePoint.from_z(z), orders=orders))
        return seen[key]

    for k in range(n):
        alpha = [0] * (2 * n)
        alpha[n + k] = 1
        for idx in np.ndindex(jet_value.shape[:-1]):
            got[idx + (k,)] = oracle.derivative(lambda z, idx=idx: float(at(z)[idx]), base, alpha, valid)
    return normalized(np.abs(got - jet_value).max(), np.abs(jet_value).max())


def _oracle_connection_dp(ctx: PointContext) -> float:
    return _mixed_path(ctx, lambda st: st.N, ctx.state.dN_dp)


def _t_of(st: GeometryState) -> np.ndarray:
    t = fundamental_tensors(st.K, st.z)
    return t.p_upper / t.K2


def _oracle_t_dp(ctx: PointContext) -> float:
    s = ctx.state
    predicted = -2 * np.outer(s.t, s.t) + s.g_upper / s.K2
    return _mixed_path(ctx, _t_of, predicted)


def _fundamental(ctx: PointContext) -> float:
    s = ctx.state
    return _max(identity_residuals(fundamental_tensors(s.K, s.z), s.p))


def _formal_christoffel(ctx: PointContext) -> float:
    s = ctx.state
    ch = formal_christoffel(s.K, s.z)
    gam = ch.gamma
    scale = np.abs(gam).max()
    sym = np.abs(gam - gam.transpose(0, 2, 1)).max()
    agree = np.abs(gam - s.gamma).max()
    return normalized(max(sym, agree), scale)


def transformed_structure(K: CartanStructure, A: np.ndarray) -> CartanStructure:
    """``K`` in the linear chart ``x' = A x``, ``p' = A^{-T} p``."""
    Ainv = np.linalg.inv(A)
    n = K.dim

    def k_squared(xt, pt):
        x = [sum(Ainv[i, k] * xt[k] for k in range(n)) for i in range(n)]
        p = [sum(A[k, i] * pt[k] for k in range(n)) for i in range(n)]
        return K.k_squared(x, p)

    def validity(z: PhasePoint) -> bool:
        return K.is_valid(back(z))

    def back(z: PhasePoint) -> PhasePoint:
        return PhasePoint(tuple(Ainv @ np.array(z.x)), tuple(A.T @ np.array(z.p)))

    return CartanStructure(n, k_squared, label=f"{K.label} (linear chart)", validity=validity)


def coordinate_invariance(ctx: PointContext) -> float:
    s = ctx.state
    n = s.n
    rng = ctx.rng(11)
    A = np.eye(n) + 0.2 * rng.normal(size=(n, n))
    Ainv = np.linalg.inv(A)
    zt = PhasePoint(tuple(A @ np.array(s.z.x)), tuple(Ainv.T @ np.array(s.z.p)))
    st = GeometryState(transformed_structure(s.K, A), zt)
    g_pred = A @ s.g_upper @ A.T
    N_pred = Ainv.T @ s.N @ Ainv
    C_pred = np.einsum("ia,jb,kc,abc->ijk", A, A, A, s.cartan)
    return max(
        normalized(abs(st.K2 - s.K2), s.K2),
        normalized(np.abs(st.g_upper - g_pred).max(), np.abs(g_pred).max()),
        normalized(np.abs(st.N - N_pred).max(), np.abs(N_pred).max()),
        normalized(np.abs(st.cartan - C_pred).max(), np.abs(C_pred).max()),
    )


def _liouville_fields(ctx: PointContext) -> float:
    rec = liouville.liouville_residuals(ctx.state)
    keep = ("c_star_norm", "bar_orthogonal", "projector_kills_c", "t_pairing")
    return max(rec[k] for k in keep)


def _projector(ctx: PointContext) -> float:
    s = ctx.state
    rec = liouville.projector_residuals(s, ctx.rng(1))
    rec["idempotent"] = liouville.liouville_residuals(s)["projector_idempotent"]
    return _max(rec)


def _flat_section(ctx: PointContext) -> float:
    s = ctx.state
    rng = ctx.rng(2)
    out = fiber.flat_section_residual(s).residual
    X = rng.normal(size=s.n)
    X = X - s.p * (s.zeta @ X) / s.Kval
    return max(out, fiber.flat_section_residual(s, X=X).residual)


def _full_frame(ctx: PointContext) -> float:
    return _max(liouville.full_frame_residuals(ctx.state))


def _reinhart(ctx: PointContext) -> float:
    """Verdict mismatch: the raw residual when flat leaves are expected, else an indicator."""
    r = connections.reinhart_residual(ctx.state)
    if ctx.descriptor.reinhart_expected:
        return r
    return 0.0 if r > connections.REINHART_THRESHOLD else 1.0


def _uniqueness(ctx: PointContext) -> float:
    floor = 1e-4
    _, weakest = connections.uniqueness_probe(ctx.state, eps=1e-3, floor=floor)
    return floor / weakest if weakest > 0 else float("inf")


def _on_level(ctx: PointContext) -> GeometryState:
    """The state at the radial projection of the sample onto ``K = 1``."""
    def build():
        z = indicatrix.on_indicatrix(ctx.structure, ctx.point, 1.0)
        return GeometryState(ctx.structure, z)
    return ctx.memo("level", build)


def _triple_parts(ctx: PointContext) -> dict:
    s = ctx.state
    return ctx.memo("triple", lambda: {
        "L": _max(subfoliation.basic_check_L(s, rng=ctx.rng(3))),
        "H": _max(subfoliation.basic_check_H(s, rng=ctx.rng(4))),
        "perp": _max(subfoliation.basic_check_perp(s, rng=ctx.rng(5))),
        "triple": _max(subfoliation.triple_compatibility(s, rng=ctx.rng(6))),
    })


def _line_curvature(ctx: PointContext) -> float:
    s = ctx.state
    return max(subfoliation.line_curvature_check(s, rng=ctx.rng(7)),
               subfoliation.line_curvature_check(s, constant=True, rng=ctx.rng(8)))


def _known_reinhart(d: MetricDescriptor) -> bool:
    return d.reinhart_expected is not None


CHECKS: tuple[Check, ...] = (
    Check("homogeneity", "ad", lambda c: _max(homogeneity_certificate(c.structure, c.point, tol=np.inf)),
          description="Euler residuals of K^2, g and N"),
    Check("fundamental_identities", "ad", _fundamental,
          description="p^i = g^ij p_j, K^2 = p_i p^i, C^ijk p_k = 0"),
    Check("formal_christoffel", "ad", _formal_christoffel,
          description="formal Christoffel symbols: symmetry and agreement"),
    Check("coordinate_invariance", "ad", coordinate_invariance,
          description="tensorial transformation under a linear chart change"),
    Check("nonlinear_connection", "ad", lambda c: _max(frames.connection_residuals(c.state)),
          description="N symmetric and 1-homogeneous"),
    Check("adapted_frame", "ad", lambda c: float(_max(frames.frame_residuals(c.state))),
          description="frame/coframe duality"),
    Check("almost_kaehler", "ad", lambda c: _max(frames.sasaki_residuals(c.state, c.rng(0))),
          description="J^2 = -I, Omega = G(J., .), G hermitian"),
    Check("symplectic_closed", "ad", lambda c: frames.d_omega_residual(c.state),
          description="dOmega = 0 on adapted frame triples"),
    Check("oracle_tensors", "fd", _oracle_tensors,
          description="g, C, N from finite differences of K^2 vs jets"),
    Check("oracle_connection_dp", "fd", _oracle_connection_dp,
          description="FD of jet-computed N vs dN/dp"),
    Check("liouville_fields", "ad", _liouville_fields,
          description="G(C*, C*) = K^2, bar fields orthogonal to C*, p_i t^i = 1"),
    Check("projector", "ad", _projector, description="projector P: splitting and idempotence"),
    Check("integrability", "ad", lambda c: liouville.integrability_check(c.state)[0],
          description="G([bar a, bar b], C*) = 0"),
    Check("fiber_levi_civita", "ad",
          lambda c: max(_max(fiber.levi_civita_residuals(c.state, c.rng(9))),
                        _max(fiber.connection_forms_residual(c.state))),
          description="fiber connection is metric and torsion-free"),
    Check("fiber_lemma", "ad", lambda c: _max(fiber.lemma_suite(c.state, c.rng(10))),
          description="covariant derivatives of C*/K, zeta and P"),
    Check("radial_geodesic", "ad", lambda c: fiber.geodesic_residual(c.state),
          description="C*/K is a fiber geodesic"),
    Check("umbilic", "ad", lambda c: fiber.umbilic_residual(c.state),
          description="leaves totally umbilical with mean curvature -1"),
    Check("flat_section", "curv", _flat_section,
          description="sectional curvature of planes containing C* vanishes"),
    Check("reduced_basis", "ad", lambda c: liouville.reduced_vertical_basis(c.state).dependency_residual,
          description="bar-d^n dependency on the retained fields"),
    Check("t_identities", "ad", lambda c: _max(liouville.t_identities(c.state)),
          description="identities of t^i"),
    Check("oracle_t_dp", "fd", _oracle_t_dp, description="FD of t vs -2 t t + g/K^2"),
    Check("bracket_identities", "ad", lambda c: _max(liouville.bracket_identities(c.state)),
          description="brackets of bar fields and C*"),
    Check("full_frame", "ad", _full_frame, description="full frame orthogonal decomposition"),
    Check("cr_structure", "ad", lambda c: _max(indicatrix.cr_certificate(_on_level(c))),
          description="indicatrix is a CR-submanifold"),
    Check("xi_line", "ad", lambda c: indicatrix.xi_line_check(c.state, c.rng(12)),
          description="[xi*, f xi*] stays on the line of xi*"),
    Check("indicatrix_tangency", "ad", lambda c: indicatrix.tangency_residual(_on_level(c)),
          description="tangent frame annihilates dK"),
    Check("nu_identity", NU_TOL, lambda c: indicatrix.nu_form_identity(_on_level(c)),
          description="nu equals the pulled-back symplectic power"),
    Check("pullback_closed", CLOSED_TOL, lambda c: indicatrix.pullback_closedness(_on_level(c)),
          description="d(i*Omega) = 0 on tangent triples"),
    Check("minimality", MINIMALITY_TOL, lambda c: indicatrix.holomorphic_minimality(_on_level(c)),
          description="holomorphic distribution is minimal"),
    Check("h_coefficients", "ad", lambda c: _max(connections.h_metric_residual(c.state)),
          description="canonical H coefficients are metric and symmetric"),
    Check("vranceanu_torsion", "ad", lambda c: _max(connections.torsion_residual(c.state)),
          description="torsion equals the vertical part of [delta_i, delta_j]"),
    Check("reinhart", "ad", _reinhart, applies=_known_reinhart,
          description="Reinhart verdict matches the metric flag"),
    Check("vaisman_axioms", "ad", lambda c: _max(connections.vaisman_axiom_certificate(c.state)),
          description="Vaisman connection axioms"),
    Check("vaisman_uniqueness", UNIQUENESS_TOL, _uniqueness,
          description="1e-3 coefficient perturbations break an axiom by more than 1e-4"),
    Check("basic_liouville", "ad", lambda c: _triple_parts(c)["L"],
          description="connection on the Liouville bundle is basic"),
    Check("basic_horizontal", "ad", lambda c: _triple_parts(c)["H"],
          description="connection on the horizontal bundle is basic"),
    Check("basic_perp", "ad", lambda c: _triple_parts(c)["perp"],
          description="connection on the C* complement is basic"),
    Check("triple_compatibility", "ad", lambda c: _triple_parts(c)["triple"],
          description="inclusion and projection compatibility"),
    Check("adapted_triple", "ad", lambda c: max(_triple_parts(c).values()),
          description="conjunction of the four basic-connection certificates"),
    Check("line_curvature", LINE_CURVATURE_TOL, _line_curvature,
          description="curvature along the C* line vanishes"),
)

BY_NAME = {c.name: c for c in CHECKS}


def default_selection(descriptor: MetricDescriptor) -> list[Check]:
    return [c for c in CHECKS if c.applies(descriptor)]
