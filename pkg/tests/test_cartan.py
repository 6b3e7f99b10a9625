from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartanv.cartan import (
    PhasePoint,
    formal_christoffel,
    fundamental_tensors,
    homogeneity_certificate,
    identity_residuals,
)
from cartanv.errors import HomogeneityViolation, NotPositiveDefinite
from cartanv.metrics import parse_expression
from cartanv.oracle import FDOracle, oracle_tensors
from cartanv.state import GeometryState

from helpers import ALL_METRICS, metric, points


def test_euclidean_tensors_at_three_four():
    K = metric("euclidean", 2).structure
    t = fundamental_tensors(K, PhasePoint((0.2, -0.1), (3.0, 4.0)))
    assert np.allclose(t.g_upper, np.eye(2), atol=1e-15)
    assert np.allclose(t.p_upper, [3.0, 4.0], atol=1e-14)
    assert t.K2 == pytest.approx(25.0)
    assert np.abs(t.cartan).max() == 0.0


@pytest.mark.parametrize("label", ["quadratic-diag", "quadratic-offdiag"])
def test_quadratic_metrics_have_vanishing_cartan_tensor(label):
    K = metric(label).structure
    for z in points(label, 10):
        assert np.abs(fundamental_tensors(K, z).cartan).max() < 1e-14


def test_randers_tensors_against_finite_differences():
    K = parse_expression("(sqrt(p1^2+p2^2) + 0.3*p1)^2", 2)
    z = PhasePoint((0.0, 0.0), (1.0, 0.0))
    t = fundamental_tensors(K, z)
    o = oracle_tensors(lambda v: float(K.k2_of_z(v)), z.z, 2, FDOracle())
    assert np.abs(o.g_upper - t.g_upper).max() <= 1e-6 * np.abs(t.g_upper).max()
    assert np.abs(o.cartan - t.cartan).max() <= 1e-6 * (1 + np.abs(t.cartan).max())
    # closed form at p = (1, 0): K = 1.3, g^11 = 1.69, g^22 = 1.3
    assert t.g_upper == pytest.approx(np.diag([1.69, 1.3]), abs=1e-13)


def test_fundamental_identities_all_metrics():
    for label in ALL_METRICS:
        K = metric(label).structure
        for z in points(label, 20):
            rec = identity_residuals(fundamental_tensors(K, z), np.array(z.p))
            assert max(rec.values()) <= 1e-10, (label, rec)


def test_flat_metric_has_no_christoffel_symbols():
    K = metric("euclidean", 2).structure
    ch = formal_christoffel(K, PhasePoint((0.5, 0.1), (0.3, 0.8)))
    assert np.abs(ch.gamma).max() == 0.0


def test_diagonal_quadratic_christoffel_closed_form():
    """``a^ij = diag(1 + x1^2, 1)``: ``g_11 = 1/(1+x1^2)``, so only gamma^1_11 is nonzero."""
    K = parse_expression("(1 + x1^2)*p1^2 + p2^2", 2)
    x1 = 0.7
    ch = formal_christoffel(K, PhasePoint((x1, -0.3), (0.4, 1.2)))
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = -x1 / (1 + x1 * x1)
    assert np.abs(ch.gamma - expected).max() < 1e-14


def test_christoffel_matches_oracle_on_diagonal_quadratic():
    K = parse_expression("(1 + x1^2)*p1^2 + p2^2", 2)
    z = PhasePoint((0.7, -0.3), (0.4, 1.2))
    o = oracle_tensors(lambda v: float(K.k2_of_z(v)), z.z, 2)
    s = GeometryState(K, z)
    assert np.abs(o.N - s.N).max() <= 1e-6 * (1 + np.abs(s.N).max())


@pytest.mark.parametrize("label", ALL_METRICS)
def test_christoffel_symmetry(label):
    K = metric(label).structure
    for z in points(label, 100)[::5]:
        g = formal_christoffel(K, z).gamma
        assert np.abs(g - g.transpose(0, 2, 1)).max() == 0.0


@pytest.mark.parametrize("label", ALL_METRICS)
def test_homogeneity_certificate_passes(label):
    K = metric(label).structure
    for z in points(label, 20):
        rec = homogeneity_certificate(K, z)
        assert max(rec.values()) <= 1e-10


def test_randers_homogeneity_at_many_points():
    K = metric("randers-dual").structure
    worst = max(max(homogeneity_certificate(K, z).values()) for z in points("randers-dual", 100))
    assert worst <= 1e-10


def test_euclidean_certificate_is_zero():
    rec = homogeneity_certificate(metric("euclidean").structure, PhasePoint((0, 0, 0), (0.3, 0.5, 0.7)))
    assert max(rec.values()) < 1e-16


def test_broken_metric_is_rejected():
    K = parse_expression("p1^2 + p1", 2)
    with pytest.raises(HomogeneityViolation):
        homogeneity_certificate(K, PhasePoint((0.1, 0.2), (0.8, 0.4)))


def test_indefinite_metric_is_rejected():
    K = parse_expression("p1^2 - p2^2", 2)
    with pytest.raises(NotPositiveDefinite):
        fundamental_tensors(K, PhasePoint((0.0, 0.0), (2.0, 0.5)))


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.3, max_value=4.0), st.integers(min_value=0, max_value=19))
def test_scale_equivariance(lam, k):
    """``g`` is 0-homogeneous, ``C`` is (-1)-homogeneous, ``K^2`` is 2-homogeneous."""
    K = metric("randers-dual").structure
    z = points("randers-dual", 20)[k]
    a, b = fundamental_tensors(K, z), fundamental_tensors(K, z.scaled(lam))
    assert b.K2 == pytest.approx(lam * lam * a.K2, rel=1e-13)
    assert np.abs(b.g_upper - a.g_upper).max() < 1e-12
    assert np.abs(lam * b.cartan - a.cartan).max() < 1e-12 * (1 + np.abs(a.cartan).max())


@pytest.mark.parametrize("label", ALL_METRICS)
def test_inverse_consistency(label):
    K = metric(label).structure
    for z in points(label, 10):
        t = fundamental_tensors(K, z)
        assert np.abs(t.g_upper @ t.g_lower - np.eye(3)).max() < 1e-12
