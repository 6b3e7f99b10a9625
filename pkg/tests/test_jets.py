from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartanv import jets
from cartanv.errors import DomainError, SingularityError
from cartanv.jets import DerivSpec, Jet


def lift1(f, p1, order, x1=0.0):
    """Lift a one-degree-of-freedom function of ``(x1, p1)`` in the momentum only."""
    return jets.lift(lambda z: f(z[0], z[1]), (x1, p1), DerivSpec(1, p_order=order))


def test_square_at_three():
    j = lift1(lambda x, p: p * p, 3.0, 2)
    assert j.value == 9.0
    assert j.partial_global(1) == 6.0
    assert j.partial_global(1, 1) == 2.0


def test_euclidean_norm_gradient():
    j = jets.lift(lambda z: jets.sqrt(z[2] ** 2 + z[3] ** 2), (0, 0, 3, 4), DerivSpec(2, p_order=1))
    assert j.value == pytest.approx(5.0, abs=1e-15)
    assert j.partial_global(2) == pytest.approx(0.6, abs=1e-15)
    assert j.partial_global(3) == pytest.approx(0.8, abs=1e-15)


def test_bilinear_mixed_coefficient():
    j = jets.lift(lambda z: z[0] * z[1], (0.4, -1.3), DerivSpec(1, p_order=1, x_order=1))
    assert j.partial_global(0, 1) == 1.0
    assert j.value == pytest.approx(0.4 * -1.3)


def test_sqrt_of_square_is_abs():
    j = lift1(lambda x, p: p * p, 2.0, 3).sqrt()
    assert [j.partial_global(*([1] * k)) if k else j.value for k in range(4)] == pytest.approx(
        [2.0, 1.0, 0.0, 0.0], abs=1e-14)


def test_geometric_series():
    j = lift1(lambda x, p: 1 / (1 + p), 0.0, 3)
    assert [j.coeff((k,)) for k in range(4)] == pytest.approx([1, -1, 1, -1], abs=1e-15)


@pytest.mark.parametrize("r", [0.5, -1.0, 1.5, 3, -2.0, 1 / 3])
def test_power_matches_closed_form(r):
    a = 1.7
    j = lift1(lambda x, p: p ** r, a, 4)
    for k in range(5):
        falling = math.prod(r - m for m in range(k))
        assert j.partial_global(*([1] * k)) == pytest.approx(falling * a ** (r - k), rel=1e-13)


POLY = {  # exponents over (x1, x2, p1, p2) -> coefficient
    (2, 0, 1, 2): 3.0,
    (0, 1, 3, 0): 1.0,
    (1, 1, 0, 1): -2.0,
    (0, 0, 1, 1): 1.0,
    (0, 0, 0, 4): 0.5,
}


def _poly_value(z):
    return sum(c * math.prod(v ** e for v, e in zip(z, exps)) for exps, c in POLY.items())


def _poly_partial(z, counts):
    """Exact partial derivative of ``POLY`` by differentiating monomials."""
    total = 0.0
    for exps, c in POLY.items():
        term = c
        for v, e, k in zip(z, exps, counts):
            if k > e:
                term = 0.0
                break
            term *= math.perm(e, k) * v ** (e - k)
        total += term
    return total


def test_polynomial_exactness_all_orders():
    """Every stored partial derivative of a mixed polynomial is exact."""
    z0 = (0.3, -0.7, 1.1, 0.6)
    spec = DerivSpec(2, p_order=4, x_order=2, total_order=5)
    j = jets.lift(lambda z: sum(c * math.prod(v ** e for v, e in zip(z, exps)) for exps, c in POLY.items()),
                  z0, spec)
    assert j.value == pytest.approx(_poly_value(z0), abs=1e-14)
    for alpha in j.space.monomials:
        counts = [0] * 4
        for var, a in zip(j.space.active, alpha):
            counts[var] += int(a)
        assert j.partial(alpha) == pytest.approx(_poly_partial(z0, counts), abs=1e-14), counts


def test_truncation_respects_orders():
    spec = DerivSpec(2, p_order=2, x_order=1)
    space = spec.space()
    for alpha in space.monomials:
        nx = sum(a for a, v in zip(alpha, space.active) if v < 2)
        npv = sum(a for a, v in zip(alpha, space.active) if v >= 2)
        assert nx <= 1 and npv <= 2 and nx + npv <= 3


def test_derivative_lowers_order():
    j = jets.lift(lambda z: z[2] ** 4 * z[0], (0.5, 0.0, 1.2, 0.0), DerivSpec(2, p_order=3, x_order=1))
    dj = j.d(2)
    assert dj.value == pytest.approx(4 * 1.2 ** 3 * 0.5)
    assert dj.partial_global(2, 2) == pytest.approx(24 * 1.2 * 0.5)


def test_array_valued_einsum_and_inverse():
    spec = DerivSpec(2, p_order=2)
    z = (0.0, 0.0, 0.8, -0.3)
    v = jets.variables(spec, z)
    A = jets.stack([jets.stack([2 + v[2] ** 2, v[2] * v[3]]), jets.stack([v[2] * v[3], 3 + v[3] ** 2])])
    Ainv = jets.inv(A)
    prod = jets.einsum("ij,jk->ik", A, Ainv)
    assert np.abs(prod.coeffs[..., 0] - np.eye(2)).max() < 1e-15
    assert np.abs(prod.coeffs[..., 1:]).max() < 1e-14


def test_mixed_order_operands_restrict():
    a = jets.lift(lambda z: z[1] ** 2, (0, 1.5), DerivSpec(1, p_order=3))
    b = jets.lift(lambda z: z[1], (0, 1.5), DerivSpec(1, p_order=1))
    c = a * b
    assert c.space.tot == 1
    assert c.partial_global(1) == pytest.approx(3 * 1.5 ** 2)


def test_sqrt_of_negative_raises():
    with pytest.raises(DomainError):
        lift1(lambda x, p: p, -1.0, 2).sqrt()
    with pytest.raises(DomainError):
        jets.sqrt(-4.0)


def test_reciprocal_of_zero_raises():
    with pytest.raises(SingularityError):
        lift1(lambda x, p: p, 0.0, 2).reciprocal()
    with pytest.raises(SingularityError):
        lift1(lambda x, p: p, 1.0, 2) / 0.0


def test_spec_validation():
    with pytest.raises(ValueError):
        DerivSpec(2, p_order=5)
    with pytest.raises(ValueError):
        DerivSpec(2, p_order=4, x_order=2, total_order=6)


_base = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


def _random_jet(coeffs, spec: DerivSpec) -> Jet:
    space = spec.space()
    c = np.asarray(coeffs[: space.size], dtype=float)
    return Jet(space, c)


_SPEC = DerivSpec(2, p_order=3, x_order=1)
_SIZE = _SPEC.space().size


@settings(max_examples=60, deadline=None)
@given(st.lists(_base, min_size=_SIZE, max_size=_SIZE), st.lists(_base, min_size=_SIZE, max_size=_SIZE),
       st.lists(_base, min_size=2, max_size=2))
def test_leibniz_rule(ca, cb, shift):
    a, b = _random_jet(ca, _SPEC), _random_jet(cb, _SPEC)
    for var in _SPEC.active_vars:
        lhs = (a * b).d(var)
        rhs = a.d(var) * b + a * b.d(var)
        assert np.abs(lhs.coeffs - rhs.restrict(lhs.space).coeffs).max() < 1e-12


@settings(max_examples=60, deadline=None)
@given(st.lists(_base, min_size=_SIZE, max_size=_SIZE), st.lists(_base, min_size=_SIZE, max_size=_SIZE),
       st.floats(min_value=0.1, max_value=3.0), st.booleans())
def test_product_quotient_roundtrip(ca, cb, b0, negative):
    a = _random_jet(ca, _SPEC)
    cb = list(cb)
    cb[0] = -b0 if negative else b0
    b = _random_jet(cb, _SPEC)
    back = (a * b) / b
    scale = 1 + np.abs(a.coeffs).max()
    assert np.abs(back.coeffs - a.coeffs).max() / scale < 1e-9 * (1 / b0) ** 4


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.2, max_value=3.0), st.floats(min_value=-1.0, max_value=1.0))
def test_chain_rule_against_closed_form(p, x):
    j = jets.lift(lambda z: jets.sqrt(z[1] * z[1] + z[0] * z[0] + 1), (x, p), DerivSpec(1, p_order=2, x_order=1))
    r = math.sqrt(p * p + x * x + 1)
    assert j.partial_global(1) == pytest.approx(p / r, rel=1e-13)
    assert j.partial_global(0, 1) == pytest.approx(-p * x / r ** 3, rel=1e-12, abs=1e-15)
    assert j.partial_global(1, 1) == pytest.approx((x * x + 1) / r ** 3, rel=1e-12)


def test_multiindex_enumeration_is_downward_closed():
    space = DerivSpec(2, p_order=4, x_order=2, total_order=5).space()
    monos = {tuple(m) for m in space.monomials}
    for m in monos:
        for k in range(len(m)):
            if m[k]:
                lower = list(m)
                lower[k] -= 1
                assert tuple(lower) in monos
    assert len(monos) == len(set(itertools.chain(monos)))
