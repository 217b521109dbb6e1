import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toeplitz_lab.errors import ConeViolation, DimensionMismatch
from toeplitz_lab.jordan import (
    ComplexSpinElement,
    SpinElement,
    complex_jordan_product,
    embed_real_form,
    in_cone,
    in_order_interval,
    involution,
    jordan_product,
    jordan_sqrt,
    random_order_interval,
)


def se(x1, *xp):
    return SpinElement(x1, list(xp))


def close(a: SpinElement, b: SpinElement, tol=1e-12):
    return abs(a.x1 - b.x1) <= tol and np.allclose(a.xprime, b.xprime, atol=tol, rtol=0)


def test_unit_is_identity():
    x = se(0.3, -1.2, 4.0)
    assert jordan_product(SpinElement.unit(3), x) == x


def test_product_examples():
    assert jordan_product(se(1, 1, 0), se(0, 1, 0)) == se(1, 1, 0)
    assert jordan_product(se(0, 1, 0), se(0, 1, 0)) == se(1, 0, 0)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        jordan_product(se(1, 0), se(1, 0, 0))


def test_cone_examples():
    assert in_cone(SpinElement.unit(3))
    assert in_cone(se(1.25, 0.75, 0))
    assert not in_cone(se(1, 1, 0))


def test_sqrt_examples():
    assert jordan_sqrt(SpinElement.unit(3)) == SpinElement.unit(3)
    y = jordan_sqrt(se(1.25, 0.75, 0))
    assert close(y, se(3 / (2 * np.sqrt(2)), np.sqrt(2) / 4, 0))
    assert close(jordan_product(y, y), se(1.25, 0.75, 0))
    assert close(jordan_sqrt(se(4, 0, 0)), se(2, 0, 0))


def test_sqrt_outside_cone_raises():
    with pytest.raises(ConeViolation):
        jordan_sqrt(se(1, 1, 0))
    with pytest.raises(ConeViolation):
        jordan_sqrt(se(-1, 0, 0))


def test_embedding_examples():
    assert embed_real_form(SpinElement.unit(3)) == ComplexSpinElement([1, 0, 0])
    assert embed_real_form(se(1, 2, 3)) == ComplexSpinElement([1, 2j, 3j])
    assert embed_real_form(se(0, 0, 0)) == ComplexSpinElement([0, 0, 0])


def test_complex_product_examples():
    e1 = ComplexSpinElement([1, 0, 0])
    z = ComplexSpinElement([0.5j, 2 - 1j, 3])
    assert complex_jordan_product(e1, z) == z
    assert complex_jordan_product(ComplexSpinElement([0, 1, 0]), ComplexSpinElement([0, 1, 0])) == ComplexSpinElement(
        [-1, 0, 0]
    )
    lhs = complex_jordan_product(embed_real_form(se(1, 1, 0)), embed_real_form(se(0, 1, 0)))
    assert lhs == ComplexSpinElement([1, 1j, 0])


def test_involution_examples():
    assert involution(ComplexSpinElement([1, 0, 0])) == ComplexSpinElement([1, 0, 0])
    assert involution(ComplexSpinElement([1j, 1 + 1j, 2])) == ComplexSpinElement([-1j, -1 + 1j, -2])
    assert involution(ComplexSpinElement([1, 2j, 3j])) == ComplexSpinElement([1, 2j, 3j])


def test_order_interval_examples():
    assert in_order_interval(se(0.5, 0, 0))
    assert not in_order_interval(SpinElement.unit(3))
    assert in_order_interval(se(0.6, 0.3, 0))


def test_order_interval_matches_radius_form():
    rng = np.random.default_rng(7)
    pts = rng.uniform(-1, 2, size=(10**5, 4))
    for v in pts[:20000]:
        x = SpinElement.from_vector(v)
        q = float(np.dot(x.xprime, x.xprime))
        expected = 0 < x.x1 < 1 and q < min(x.x1, 1 - x.x1) ** 2
        assert in_order_interval(x) == expected


def test_elements_are_immutable():
    x = se(1, 2, 3)
    with pytest.raises(ValueError):
        x.xprime[0] = 5.0
    with pytest.raises(Exception):
        x.x1 = 2.0


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        se(np.nan, 0, 0)


def test_random_order_interval_points_are_inside():
    x1, xp = random_order_interval(np.random.default_rng(0), 5, 2000)
    assert all(in_order_interval(SpinElement(a, b)) for a, b in zip(x1, xp))


vec = st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4)


@given(vec, vec)
def test_product_commutes(a, b):
    x, y = SpinElement.from_vector(a), SpinElement.from_vector(b)
    assert jordan_product(x, y) == jordan_product(y, x)


@given(vec, vec)
def test_jordan_identity(a, b):
    x, y = SpinElement.from_vector(a), SpinElement.from_vector(b)
    x2 = jordan_product(x, x)
    lhs = jordan_product(x2, jordan_product(x, y))
    rhs = jordan_product(x, jordan_product(x2, y))
    scale = 1 + max(np.max(np.abs(lhs.to_vector())), 1.0)
    assert np.max(np.abs((lhs - rhs).to_vector())) <= 1e-12 * scale


@given(vec, vec)
def test_complexification_is_a_homomorphism(a, b):
    x, y = SpinElement.from_vector(a), SpinElement.from_vector(b)
    lhs = complex_jordan_product(embed_real_form(x), embed_real_form(y)).z
    rhs = embed_real_form(jordan_product(x, y)).z
    assert np.max(np.abs(lhs - rhs)) <= 1e-14 * (1 + np.max(np.abs(rhs)))


cvec = st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=3, max_size=3)


@given(cvec, cvec)
def test_involution_properties(a, b):
    z, w = ComplexSpinElement(a), ComplexSpinElement(b)
    assert involution(involution(z)) == z
    lhs = involution(complex_jordan_product(z, w)).z
    rhs = complex_jordan_product(involution(z), involution(w)).z
    assert np.max(np.abs(lhs - rhs)) <= 1e-14 * (1 + np.max(np.abs(rhs)))


@settings(max_examples=200)
@given(st.floats(1e-3, 1 - 1e-3), st.floats(0, 0.999), st.floats(0, 2 * np.pi))
def test_sqrt_round_trip(x1, frac, phi):
    rad = frac * min(x1, 1 - x1)
    x = se(x1, rad * np.cos(phi), rad * np.sin(phi))
    y = jordan_sqrt(x)
    assert in_cone(y)
    assert close(jordan_product(y, y), x)
