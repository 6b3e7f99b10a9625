from __future__ import annotations

import numpy as np
import pytest

from cartanv.cartan import PhasePoint
from cartanv.errors import AdaptedBasisDegenerate
from cartanv.liouville import (
    bracket_identities,
    full_frame,
    full_frame_residuals,
    integrability_check,
    liouville_data,
    liouville_residuals,
    projector_residuals,
    reduced_vertical_basis,
    t_identities,
)
from cartanv.state import GeometryState

from helpers import ALL_METRICS, metric, points, rng

EUCLID_2 = (metric("euclidean", 2).structure, PhasePoint((0.1, -0.2), (3.0, 4.0)))


def test_euclidean_closed_forms():
    d = liouville_data(*EUCLID_2)
    assert d.zeta == pytest.approx([0.6, 0.8], abs=1e-15)
    assert d.t == pytest.approx([3 / 25, 4 / 25], abs=1e-15)
    assert np.abs(d.P - np.array([[16, -12], [-12, 9]]) / 25).max() < 1e-15
    assert np.array_equal(d.C_star, [0, 0, 3, 4])
    assert np.array_equal(d.xi_star, [3, 4, 0, 0])


def test_euclidean_reduced_basis_dependency():
    rb = reduced_vertical_basis(*EUCLID_2)
    # bar-d^2 = -(3/4) bar-d^1
    bar1 = rb.rows[0]
    bar2 = liouville_data(*EUCLID_2).E[1]
    assert np.abs(bar2 + 0.75 * bar1).max() < 1e-15
    assert rb.dependency == pytest.approx([0.75])


@pytest.mark.parametrize("label", ALL_METRICS)
def test_projector_algebra(label):
    for k, z in enumerate(points(label, 20)):
        K = metric(label).structure
        rec = liouville_residuals(K, z)
        assert rec["projector_idempotent"] <= 1e-12
        assert max(rec.values()) <= 1e-10, rec
        assert max(projector_residuals(K, z, rng(k)).values()) <= 1e-10


def test_radial_norm_on_randers():
    K = metric("randers-dual").structure
    worst = max(liouville_residuals(K, z)["c_star_norm"] for z in points("randers-dual", 100))
    assert worst <= 1e-10


@pytest.mark.parametrize("label", ALL_METRICS)
def test_reduced_basis(label):
    K = metric(label).structure
    for z in points(label, 100):
        rb = reduced_vertical_basis(K, z)
        assert rb.dependency_residual <= 1e-12
        assert rb.smallest_singular_value >= 0.01


def test_reduced_basis_requires_nonzero_last_momentum():
    K = metric("euclidean").structure
    with pytest.raises(AdaptedBasisDegenerate):
        reduced_vertical_basis(K, PhasePoint((0, 0, 0), (1.0, 0.5, 0.01)))


def test_t_identities_vanish_for_euclidean():
    rec = t_identities(metric("euclidean").structure, PhasePoint((0, 0, 0), (0.3, -0.8, 0.6)))
    assert max(rec.values()) <= 1e-12


@pytest.mark.parametrize("label", ALL_METRICS)
def test_t_identities(label):
    K = metric(label).structure
    worst = max(max(t_identities(K, z).values()) for z in points(label, 100))
    assert worst <= 1e-10


def test_bracket_identities_euclidean_plane():
    rec = bracket_identities(*EUCLID_2)
    assert rec["bar_bar"] <= 1e-11


def test_bracket_of_field_with_itself_is_zero():
    from cartanv.frames import lie_bracket_value

    s = GeometryState(metric("randers-dual").structure, points("randers-dual", 1)[0])
    for row in s.bar_jet:
        assert np.abs(lie_bracket_value(row, row)).max() == 0.0


@pytest.mark.parametrize("label", ALL_METRICS)
def test_bracket_identities(label):
    K = metric(label).structure
    for z in points(label, 30):
        assert max(bracket_identities(K, z).values()) <= 1e-10


def test_integrability_euclidean():
    res, _ = integrability_check(metric("euclidean").structure, PhasePoint((0, 0, 0), (0.3, -0.8, 0.6)))
    assert res <= 1e-11


@pytest.mark.parametrize("label", ALL_METRICS)
def test_liouville_distribution_is_integrable(label):
    K = metric(label).structure
    controls = []
    for z in points(label, 100):
        res, control = integrability_check(K, z)
        assert res <= 1e-9
        controls.append(control)
    # the mixed pairing is not forced to vanish; it is only recorded
    assert np.isfinite(controls).all()


def test_full_frame_euclidean_plane():
    ff = full_frame(*EUCLID_2)
    assert np.array_equal(ff.xi_star, [3, 4, 0, 0])
    s = GeometryState(*EUCLID_2)
    gram = ff.matrix @ s.G @ ff.matrix.T
    assert np.abs(gram - np.diag(np.diag(gram))).max() < 1e-15


@pytest.mark.parametrize("label", ALL_METRICS)
def test_full_frame_orthogonal_decomposition(label):
    K = metric(label).structure
    for z in points(label, 30):
        s = GeometryState(K, z)
        assert max(full_frame_residuals(s).values()) <= 1e-10
        ff = full_frame(s)
        assert np.abs(s.J @ ff.xi_star + ff.C_star).max() <= 1e-14 * (1 + np.abs(ff.C_star).max())
