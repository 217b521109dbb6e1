from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toeplitz_lab.actions import GroupElement, torus_element
from toeplitz_lab.errors import DimensionMismatch, NotAWeightVector, OutOfRange
from toeplitz_lab.polyspaces import (
    GaussianRational,
    Polynomial,
    WeightLabel,
    act_on_poly,
    branching_count,
    branching_multiplicity,
    decompose,
    evaluate,
    harmonic_basis,
    harmonic_dim,
    highest_weight_vector,
    holomorphic_laplacian,
    monomials,
    q_basis,
    weight_of,
)

I = GaussianRational(0, 1)


def z(n, j, c=1):
    return Polynomial.variable(n, j, c)


def random_poly(rng, n, m):
    terms = {}
    for alpha in monomials(n, m):
        if rng.random() < 0.6:
            terms[alpha] = GaussianRational(Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5))),
                                            Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5))))
    return Polynomial(n, terms)


def coeff_close(p, q, tol):
    keys = set(p.terms) | set(q.terms)
    return all(abs(complex(p.terms.get(k, 0)) - complex(q.terms.get(k, 0))) < tol for k in keys)


def test_gaussian_rational_arithmetic():
    a = GaussianRational(Fraction(1, 2), Fraction(-1, 3))
    b = GaussianRational(2, 1)
    assert a * b == GaussianRational(Fraction(4, 3), Fraction(-1, 6))
    assert (a / b) * b == a
    assert a.conjugate() == GaussianRational(Fraction(1, 2), Fraction(1, 3))
    assert complex(a) == pytest.approx(0.5 - 1j / 3)
    assert not GaussianRational()


def test_zero_coefficients_not_stored():
    p = z(3, 0) - z(3, 0)
    assert p.terms == {} and p.is_zero()
    with pytest.raises(DimensionMismatch):
        Polynomial(3, {(1, 0): 1})


def test_evaluate_examples():
    pt = np.array([1, 1j, 0])
    assert evaluate(Polynomial.constant(3), pt) == 1
    assert evaluate((z(3, 0) - z(3, 1, I)) ** 2, pt) == pytest.approx(4)
    assert evaluate(Polynomial.zz(3), pt) == pytest.approx(0)
    with pytest.raises(DimensionMismatch):
        evaluate(Polynomial.zz(3), np.zeros(4))


def test_evaluate_batch_matches_pointwise():
    rng = np.random.default_rng(1)
    p = random_poly(rng, 4, 3)
    pts = rng.standard_normal((20, 4)) + 1j * rng.standard_normal((20, 4))
    batch = evaluate(p, pts)
    for k in range(20):
        direct = sum(complex(c) * np.prod(pts[k] ** np.array(a)) for a, c in p.terms.items())
        assert batch[k] == pytest.approx(direct, rel=1e-12)


def test_laplacian_examples():
    assert holomorphic_laplacian(z(3, 0) ** 2) == Polynomial.constant(3, 2)
    for n in (3, 4, 5):
        assert holomorphic_laplacian(Polynomial.zz(n)) == Polynomial.constant(n, 2 * n)
    for m in range(6):
        assert holomorphic_laplacian(highest_weight_vector(m, 0, 4)).is_zero()


def test_harmonic_basis_examples():
    assert harmonic_basis(3, 0) == [Polynomial.constant(3)]
    assert len(harmonic_basis(4, 1)) == 4
    assert len(harmonic_basis(3, 2)) == 5
    with pytest.raises(OutOfRange):
        harmonic_basis(3, -1)


def test_harmonic_dim_examples():
    for n in (3, 4, 7):
        assert harmonic_dim(n, 0) == 1
    assert harmonic_dim(3, 2) == 5
    assert harmonic_dim(4, 2) == 9


@pytest.mark.parametrize("n,m", [(n, m) for n in (3, 4, 5) for m in range(6)])
def test_harmonic_basis_exact(n, m):
    basis = harmonic_basis(n, m)
    assert len(basis) == harmonic_dim(n, m)
    assert all(holomorphic_laplacian(h).is_zero() for h in basis)
    assert all(h.is_homogeneous and h.degree == m for h in basis)


def test_dimension_identity():
    for n in range(3, 7):
        for m in range(9):
            assert sum(harmonic_dim(n, m - 2 * k) for k in range(m // 2 + 1)) == comb(n + m - 1, n - 1)


def test_decompose_examples():
    h = highest_weight_vector(3, 0, 3)
    assert decompose(h) == {(3, 0): h}
    assert decompose(Polynomial.zz(4)) == {(0, 1): Polynomial.constant(4)}
    n = 3
    parts = decompose(z(n, 0) ** 2)
    third = GaussianRational(Fraction(1, n))
    assert parts[(2, 0)] == z(n, 0) ** 2 - Polynomial.zz(n) * third
    assert parts[(0, 1)] == Polynomial.constant(n, third)


@pytest.mark.parametrize("n,m", [(3, 4), (3, 6), (4, 5), (5, 4), (5, 6)])
def test_decompose_reconstructs_exactly(n, m):
    rng = np.random.default_rng(10 * n + m)
    p = random_poly(rng, n, m)
    parts = decompose(p)
    total = Polynomial(n)
    for (k1, k2), h in parts.items():
        assert k1 + 2 * k2 == m
        assert holomorphic_laplacian(h).is_zero()
        total = total + h * Polynomial.zz(n) ** k2
    assert total == p


def test_highest_weight_vector_examples():
    assert highest_weight_vector(0, 0, 3) == Polynomial.constant(3)
    assert highest_weight_vector(1, 0, 3) == z(3, 0) - z(3, 1, I)
    assert highest_weight_vector(1, 1, 3) == (z(3, 0) - z(3, 1, I)) * Polynomial.zz(3)


def test_q_basis_examples():
    b = q_basis(3, 1)
    assert len(b) == 3
    expected = {
        (z(3, 0) - z(3, 1, I)): WeightLabel((-1,), -1),
        (z(3, 0) + z(3, 1, I)): WeightLabel((1,), -1),
        z(3, 2): WeightLabel((0,), -1),
    }
    assert dict(b) == expected
    for n in (3, 4):
        assert q_basis(n, 0) == [(Polynomial.constant(n), WeightLabel((0,) * (n // 2), 0))]
    assert sorted(lab.torus_weight for _, lab in q_basis(4, 1)) == [(-1, 0), (0, -1), (0, 1), (1, 0)]


@pytest.mark.parametrize("n,m", [(3, 3), (4, 3), (5, 2)])
def test_q_basis_spans(n, m):
    b = q_basis(n, m)
    assert len(b) == comb(n + m - 1, n - 1)
    exps = monomials(n, m)
    C = np.array([[complex(q.terms.get(a, 0)) for a in exps] for q, _ in b])
    assert np.linalg.matrix_rank(C) == len(exps)


def test_weight_of_examples():
    assert weight_of(z(3, 0) - z(3, 1, I)).torus_weight == (-1,)
    assert weight_of(z(3, 2)).torus_weight == (0,)
    with pytest.raises(NotAWeightVector):
        weight_of(z(3, 0))
    for n in (3, 4, 5):
        for q, lab in q_basis(n, 2):
            assert weight_of(q) == lab


def test_act_on_poly_examples():
    p = z(3, 0) ** 2
    assert coeff_close(act_on_poly(GroupElement.identity(3), p), p, 1e-15)
    assert coeff_close(act_on_poly(GroupElement(np.eye(3), 1j), p), -p, 1e-15)
    g = torus_element([np.pi / 2], 3)
    assert coeff_close(act_on_poly(g, z(3, 0)), -z(3, 1), 1e-15)


def test_act_on_poly_matches_pullback():
    rng = np.random.default_rng(2)
    from toeplitz_lab.actions import act, random_group_element

    p = random_poly(rng, 4, 3)
    g = random_group_element(rng, 4)
    pts = rng.standard_normal((10, 4)) + 1j * rng.standard_normal((10, 4))
    np.testing.assert_allclose(evaluate(act_on_poly(g, p), pts), evaluate(p, act(g.inverse(), pts)), rtol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_weight_covariance(n):
    rng = np.random.default_rng(n)
    for q, lab in q_basis(n, 3):
        theta = rng.uniform(-np.pi, np.pi, n // 2)
        phase = np.exp(1j * np.dot(lab.torus_weight, theta))
        assert coeff_close(act_on_poly(torus_element(theta, n), q), q * complex(phase), 1e-12)


def test_so2_character_and_degree():
    rng = np.random.default_rng(3)
    for m in range(5):
        p = random_poly(rng, 4, m)
        t = np.exp(1j * rng.uniform(-np.pi, np.pi))
        out = act_on_poly(GroupElement(np.eye(4), t), p)
        assert coeff_close(out, p * complex(t ** (-m)), 1e-12)
        if not p.is_zero():
            assert out.is_homogeneous and out.degree == m


def test_branching_examples():
    assert branching_multiplicity(2, 0) == 2
    assert branching_multiplicity(2, 1) == 1
    for m in range(9):
        assert branching_multiplicity(m, m) == 1
    with pytest.raises(OutOfRange):
        branching_multiplicity(2, 3)
    with pytest.raises(OutOfRange):
        branching_multiplicity(2, 1, n=3)


def test_branching_formula_matches_count_and_dimension():
    for m in range(9):
        for r in range(m + 1):
            assert branching_multiplicity(m, r) == branching_count(m, r) >= 1
    for n in (4, 5, 6):
        for m in range(7):
            total = sum(branching_multiplicity(m, r, n) * harmonic_dim(n - 1, r) for r in range(m + 1))
            assert total == comb(n + m - 1, n - 1)


def test_json_round_trip():
    rng = np.random.default_rng(4)
    p = random_poly(rng, 3, 4)
    assert Polynomial.from_json(p.to_json()) == p


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 5), st.integers(0, 4))
def test_decompose_property(seed, n, m):
    p = random_poly(np.random.default_rng(seed), n, m)
    total = Polynomial(n)
    for (k1, k2), h in decompose(p).items():
        total = total + h * Polynomial.zz(n) ** k2
    assert total == p
