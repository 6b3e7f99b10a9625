from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartanv.cartan import PhasePoint
from cartanv.errors import IllConditioned
from cartanv.frames import d_omega_residual
from cartanv.indicatrix import (
    cr_certificate,
    gram_schmidt,
    holomorphic_minimality,
    indicatrix_frame,
    levi_civita_symbols,
    minimality_sign_invariance,
    nu_form_identity,
    nu_ordering_diagnostics,
    nu_repeated_field,
    nu_values,
    on_indicatrix,
    pfaffian,
    pullback_closedness,
    tangency_residual,
    xi_line_check,
)
from cartanv.state import GeometryState

from helpers import ALL_METRICS, metric, points, rng


def level_states(label: str, count: int, dim: int = 3):
    K = metric(label, dim).structure
    return [GeometryState(K, on_indicatrix(K, z)) for z in points(label, count, dim=dim)]


def test_radial_rescale_lands_on_level():
    K = metric("randers-dual").structure
    for z in points("randers-dual", 5):
        for c in (0.5, 1.0, 2.0):
            assert np.sqrt(K.evaluate(on_indicatrix(K, z, c))) == pytest.approx(c, rel=1e-14)


def test_pfaffian_small_cases():
    assert pfaffian(np.array([[0.0, 2.5], [-2.5, 0.0]])) == 2.5
    a, b, c, d, e, f = 1.0, 2.0, 3.0, 4.0, 5.0, 6.0
    A = np.array([[0, a, b, c], [-a, 0, d, e], [-b, -d, 0, f], [-c, -e, -f, 0]])
    assert pfaffian(A) == pytest.approx(a * f - b * e + c * d)
    assert pfaffian(np.zeros((3, 3))) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=10 ** 6))
def test_pfaffian_squared_is_determinant(half, seed):
    M = np.random.default_rng(seed).normal(size=(2 * half, 2 * half))
    A = M - M.T
    assert pfaffian(A) ** 2 == pytest.approx(np.linalg.det(A), rel=1e-9, abs=1e-12)


def test_gram_schmidt_orthonormal_and_guarded():
    r = rng(0)
    M = r.normal(size=(4, 4))
    G = M @ M.T + 4 * np.eye(4)
    V = r.normal(size=(3, 4))
    E = gram_schmidt(V, G)
    assert np.abs(E @ G @ E.T - np.eye(3)).max() < 1e-13
    with pytest.raises(IllConditioned):
        gram_schmidt(np.vstack([V[0], 2 * V[0]]), G)


@pytest.mark.parametrize("label", ALL_METRICS)
def test_frame_is_tangent_to_indicatrix(label):
    for s in level_states(label, 20):
        assert tangency_residual(s) <= 1e-12
        fr = indicatrix_frame(s)
        assert np.abs(fr.coframe @ fr.orthonormal.T - np.eye(4)).max() < 1e-12


@pytest.mark.parametrize("label", ALL_METRICS)
def test_cr_structure(label):
    for s in level_states(label, 30):
        rec = cr_certificate(s)
        assert rec["j_xi"] <= 1e-14 and rec["j_bar"] <= 1e-12
        assert max(rec.values()) <= 1e-10, rec


def test_nu_vanishes_on_tuples_with_the_normal_field():
    s = level_states("randers-dual", 1)[0]
    m = s.n - 1
    for idx, nu, pf in nu_values(s):
        if m in idx:
            assert abs(nu) < 1e-15 and abs(pf) < 1e-15


def test_nu_of_orthonormal_holomorphic_frame_is_one():
    for s in level_states("randers-dual", 5):
        fr = indicatrix_frame(s)
        assert np.linalg.det(fr.coframe @ fr.orthonormal.T) == pytest.approx(1.0, abs=1e-13)


def test_nu_identity_randers():
    worst = max(nu_form_identity(s) for s in level_states("randers-dual", 50))
    assert worst <= 1e-8


@pytest.mark.parametrize("label", ALL_METRICS)
def test_nu_identity(label):
    for s in level_states(label, 10):
        assert nu_form_identity(s) <= 1e-8


def test_nu_identity_other_dimensions():
    for dim in (2, 4):
        for s in level_states("randers-dual", 5, dim=dim):
            assert nu_form_identity(s) <= 1e-8


def test_nu_with_repeated_field_vanishes():
    for s in level_states("quartic-root", 5):
        assert nu_repeated_field(s) < 1e-14


def test_literal_orderings_disagree_in_three_dimensions():
    """Block covector order flips the sign for n = 3; the raw dual frame misses the Gram factor."""
    s = level_states("randers-dual", 1)[0]
    diag = nu_ordering_diagnostics(s)
    assert diag["block_order"] > 1e-2 and diag["raw_dual"] > 1e-2


def test_ambient_symplectic_form_closed():
    for s in level_states("randers-dual", 5):
        assert d_omega_residual(s) <= 1e-9


@pytest.mark.parametrize("label", ALL_METRICS)
def test_pullback_of_symplectic_form_is_closed(label):
    for s in level_states(label, 20):
        assert pullback_closedness(s) <= 1e-8


def test_pullback_closed_in_two_dimensions():
    for s in level_states("randers-dual", 10, dim=2):
        assert pullback_closedness(s) <= 1e-9


def test_levi_civita_symbols_flat_for_euclidean():
    s = level_states("euclidean", 1)[0]
    # G is constant when N = 0 and g is constant
    assert np.abs(levi_civita_symbols(s)).max() == 0.0


def test_minimality_euclidean_plane():
    for s in level_states("euclidean", 10, dim=2):
        assert holomorphic_minimality(s) <= 1e-9


@pytest.mark.parametrize("label", ALL_METRICS)
def test_holomorphic_distribution_is_minimal(label):
    for s in level_states(label, 20):
        assert holomorphic_minimality(s) <= 1e-6


def test_minimality_trace_is_even_in_the_frame():
    for s in level_states("randers-dual", 5):
        assert minimality_sign_invariance(s) <= 1e-15


@pytest.mark.parametrize("label", ALL_METRICS)
def test_normal_line_is_a_foliation(label):
    for k, z in enumerate(points(label, 20)):
        assert xi_line_check(metric(label).structure, z, rng(k)) <= 1e-10


def test_off_level_point_still_yields_frame():
    s = GeometryState(metric("randers-dual").structure, PhasePoint((0.1, 0.2, 0.3), (0.4, 0.5, 1.7)))
    assert indicatrix_frame(s).level == pytest.approx(s.Kval)
