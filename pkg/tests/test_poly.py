import numpy as np
import pytest

from maglab.poly import (
    Polynomial,
    PolyMatrixField,
    PolyVectorField,
    curl,
    gradient,
    multi_indices,
)

from conftest import X1, X2, ZERO, random_potential


def test_multi_indices_count():
    # number of multi-indices with |alpha| = k in d variables: C(k+d-1, d-1)
    assert len(list(multi_indices(2, 3))) == 4
    assert len(list(multi_indices(3, 2))) == 6
    assert sum(sum(a) == 2 for a in multi_indices(2, 2)) == 3


def test_polynomial_arithmetic_and_eval():
    p = Polynomial(2, {(1, 0): 2.0, (0, 2): -1.0})
    q = Polynomial(2, {(1, 0): -2.0})
    s = p + q
    assert s.terms == {(0, 2): -1.0}
    prod = p * q
    assert prod.terms == {(2, 0): -4.0, (1, 2): 2.0}
    pts = np.array([[1.0, 2.0], [0.5, -1.0]])
    np.testing.assert_allclose(p.eval(pts), [2 - 4, 1 - 1])
    assert p.eval([3.0, 1.0]) == pytest.approx(5.0)


def test_zero_terms_dropped_and_degree():
    p = Polynomial(2, {(1, 1): 0.0, (2, 0): 1.0})
    assert (1, 1) not in p.terms
    assert p.degree == 2
    assert Polynomial.zero(2).degree == -1


def test_diff_and_deriv():
    p = Polynomial(2, {(3, 1): 2.0})
    assert p.diff(0).terms == {(2, 1): 6.0}
    assert p.deriv((2, 1)).terms == {(1, 0): 12.0}
    assert p.deriv((4, 0)).is_zero()


def test_curl_symmetric_gauge_constant():
    A = PolyVectorField((X2.scale(-0.5), X1.scale(0.5)))
    B = curl(A)
    assert B.entry(0, 1).terms == {(0, 0): 1.0}


def test_curl_direct_differentiation():
    A = PolyVectorField((ZERO, Polynomial.monomial(2, (2, 0), 0.5)))
    assert curl(A).entry(0, 1).terms == {(1, 0): 1.0}


def test_curl_of_gradient_vanishes():
    rng = np.random.default_rng(7)
    for _ in range(5):
        terms = {tuple(int(e) for e in rng.integers(0, 3, size=2)): float(rng.standard_normal())
                 for _ in range(5)}
        theta = Polynomial(2, terms)
        assert curl(gradient(theta)).is_zero()


def test_curl_antisymmetry_exact():
    rng = np.random.default_rng(3)
    for _ in range(5):
        A = random_potential(rng)
        B = curl(A)
        for j in range(2):
            for k in range(2):
                assert (B.entry(j, k) + B.entry(k, j)).is_zero()


def test_matrix_field_rejects_nonantisymmetric():
    with pytest.raises(ValueError):
        PolyMatrixField(((X1, X2), (X2, ZERO)))


def test_compose_linear_matches_pointwise():
    rng = np.random.default_rng(11)
    p = Polynomial(2, {(2, 1): 1.5, (0, 3): -0.7, (1, 0): 2.0})
    M = rng.standard_normal((2, 2))
    q = p.compose_linear(M)
    pts = rng.standard_normal((20, 2))
    np.testing.assert_allclose(q.eval(pts), p.eval(pts @ M.T), rtol=1e-12, atol=1e-12)


def test_shift_matches_pointwise():
    rng = np.random.default_rng(13)
    p = Polynomial(2, {(2, 2): 0.3, (1, 0): -1.0})
    y = np.array([0.7, -1.2])
    q = p.shift(y)
    pts = rng.standard_normal((20, 2))
    np.testing.assert_allclose(q.eval(pts), p.eval(pts + y), rtol=1e-12, atol=1e-12)


def test_rotate_transforms_field_consistently():
    # rotating the potential rotates the field: B'(y) = R^T B(R y) R for x = R y
    rng = np.random.default_rng(17)
    A = random_potential(rng)
    B = curl(A)
    ang = 0.73
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    A2 = A.rotate(R)
    B2 = curl(A2)
    pts = rng.standard_normal((10, 2))
    for y in pts:
        lhs = np.array([[B2.entry(j, k).eval(y) for k in range(2)] for j in range(2)])
        x = R @ y
        Bx = np.array([[B.entry(j, k).eval(x) for k in range(2)] for j in range(2)])
        np.testing.assert_allclose(lhs, R.T @ Bx @ R, rtol=1e-10, atol=1e-10)


def test_frobenius():
    B = PolyMatrixField.from_upper(2, {(0, 1): Polynomial.constant(2, 1.0)})
    assert B.frobenius(np.zeros(2)) == pytest.approx(np.sqrt(2))
