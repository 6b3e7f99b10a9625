from __future__ import annotations

import numpy as np
import pytest

from cartanv import jets
from cartanv.cartan import PhasePoint
from cartanv.frames import (
    adapted_fields,
    adapted_frame,
    connection_residuals,
    d_omega_residual,
    exterior_derivative_pointwise,
    frame_residuals,
    lie_bracket_value,
    nonlinear_connection,
    sasaki_residuals,
    sasaki_structures,
)
from cartanv.jets import Jet
from cartanv.metrics import parse_expression
from cartanv.oracle import oracle_tensors
from cartanv.state import GeometryState

from helpers import ALL_METRICS, metric, points, rng


def test_flat_connection_vanishes():
    s = GeometryState(metric("euclidean").structure, PhasePoint((0.2, 0.3, -0.4), (0.5, -0.6, 0.9)))
    nc = nonlinear_connection(s)
    assert np.abs(nc.N).max() == 0.0
    fr = adapted_frame(s)
    assert np.array_equal(fr.frame, np.eye(6))


def test_diagonal_quadratic_connection_against_oracle():
    K = parse_expression("(1 + x1^2)*p1^2 + p2^2", 2)
    z = PhasePoint((0.6, 0.2), (0.9, -0.5))
    o = oracle_tensors(lambda v: float(K.k2_of_z(v)), z.z, 2)
    N = nonlinear_connection(K, z).N
    assert np.abs(N - o.N).max() <= 1e-6 * (1 + np.abs(N).max())
    # closed form: N_11 = gamma^1_11 p_1 = -x1 p1 / (1 + x1^2)
    assert N[0, 0] == pytest.approx(-0.6 * 0.9 / 1.36, rel=1e-13)


@pytest.mark.parametrize("label", ALL_METRICS)
def test_connection_symmetry_and_homogeneity(label):
    for z in points(label, 15):
        rec = connection_residuals(metric(label).structure, z)
        assert max(rec.values()) <= 1e-10, rec


@pytest.mark.parametrize("label", ALL_METRICS)
def test_coframe_duality(label):
    for z in points(label, 10):
        fr = adapted_frame(metric(label).structure, z)
        assert np.abs(fr.coframe @ fr.frame - np.eye(6)).max() < 1e-14


def test_randers_frame_is_unimodular():
    K = metric("randers-dual", 2).structure
    for z in points("randers-dual", 10, dim=2):
        assert frame_residuals(K, z)["unimodular"] < 1e-14


@pytest.mark.parametrize("label", ALL_METRICS)
def test_almost_kaehler_structure(label):
    for k, z in enumerate(points(label, 20)):
        rec = sasaki_residuals(metric(label).structure, z, rng(k))
        assert rec["j_squared"] <= 1e-12
        assert max(rec.values()) <= 1e-10, rec


def test_symplectic_form_pairs_momenta_with_positions():
    sd = sasaki_structures(metric("randers-dual").structure, points("randers-dual", 1)[0])
    W = sd.Omega_natural
    assert np.array_equal(W[3:, :3], np.eye(3))
    assert np.array_equal(W[:3, 3:], -np.eye(3))
    assert np.array_equal(W[:3, :3], np.zeros((3, 3)))


def _const(s: GeometryState, v) -> Jet:
    return Jet.constant(s.delta_jet.space, np.asarray(v, dtype=float))


def test_coordinate_fields_commute():
    s = GeometryState(metric("randers-dual").structure, points("randers-dual", 1)[0])
    ex, ep = np.eye(6)[0], np.eye(6)[3]
    assert np.abs(lie_bracket_value(_const(s, ex), _const(s, ep))).max() == 0.0


@pytest.mark.parametrize("label", ALL_METRICS)
def test_radial_field_commutes_with_horizontal_fields(label):
    for z in points(label, 10):
        s = GeometryState(metric(label).structure, z)
        for i in range(3):
            b = lie_bracket_value(s.C_star_jet, s.delta_jet[i])
            assert np.abs(b).max() <= 1e-12 * (1 + np.abs(s.N).max())


@pytest.mark.parametrize("label", ALL_METRICS)
def test_horizontal_vertical_brackets_are_vertical(label):
    for z in points(label, 5):
        s = GeometryState(metric(label).structure, z)
        for i in range(3):
            for j in range(3):
                b = lie_bracket_value(s.delta_jet[i], _const(s, s.vertical[j]))
                assert np.abs(b[:3]).max() == 0.0


def test_exterior_derivative_of_coordinate_one_form():
    s = GeometryState(metric("randers-dual").structure, points("randers-dual", 1)[0])
    fields = adapted_fields(s)
    for X in fields[:2]:
        for Y in fields[3:5]:
            assert abs(exterior_derivative_pointwise(lambda V: V[0], [X, Y])) < 1e-15


@pytest.mark.parametrize("label", ALL_METRICS)
def test_symplectic_form_is_closed(label):
    for z in points(label, 5):
        assert d_omega_residual(metric(label).structure, z) <= 1e-9


def test_d_of_k_dk_two_ways():
    """``d(K dK) = dK ^ dK = 0``: the invariant formula must reproduce it."""
    s = GeometryState(metric("randers-dual").structure, points("randers-dual", 1)[0])
    Kj = s.K_jet

    def form(V):
        return Kj * jets.directional_jet(Kj, V)

    fields = adapted_fields(s)
    direct = max(abs(exterior_derivative_pointwise(form, [X, Y])) for X in fields for Y in fields)
    dK = lambda V: jets.directional(Kj, jets.value(V))
    product = max(abs(dK(X) * dK(Y) - dK(Y) * dK(X)) for X in fields for Y in fields)
    assert direct <= 1e-10 and product == 0.0
