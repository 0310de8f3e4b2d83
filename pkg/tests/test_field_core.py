import math

import numpy as np
import pytest

from maglab import field_core as fc
from maglab.poly import Polynomial, PolyMatrixField, PolyVectorField, curl

from conftest import X1, X2, ZERO

B_CONST = PolyMatrixField.from_upper(2, {(0, 1): Polynomial.constant(2, 1.0)})
B_MONT = PolyMatrixField.from_upper(2, {(0, 1): X1})
B_QUAD = PolyMatrixField.from_upper(2, {(0, 1): X1 * X1 - X2 * X2})


class TestVanishingOrder:
    def test_linear_at_origin(self):
        assert fc.vanishing_order(B_MONT, [0.0, 0.0]) == 1

    def test_linear_off_axis(self):
        assert fc.vanishing_order(B_MONT, [1.0, 0.0]) == 0

    def test_quadratic_at_origin(self):
        assert fc.vanishing_order(B_QUAD, [0.0, 0.0]) == 2

    def test_zero_field_raises(self):
        Bz = PolyMatrixField.from_upper(2, {(0, 1): ZERO})
        with pytest.raises(fc.ZeroFieldError):
            fc.vanishing_order(Bz, [0.0, 0.0])

    def test_stable_under_small_perturbation(self):
        # coefficients perturbed below tol never change the reported order
        eps = 1e-12
        Bp = PolyMatrixField.from_upper(2, {(0, 1): X1 + Polynomial.constant(2, eps)})
        assert fc.vanishing_order(Bp, [0.0, 0.0], tol=1e-8) == 1
        Bq = PolyMatrixField.from_upper(
            2, {(0, 1): X1 * X1 - X2 * X2 + X1.scale(eps)})
        assert fc.vanishing_order(Bq, [0.0, 0.0], tol=1e-8) == 2


class TestMTilde:
    def test_constant(self):
        # Frobenius norm sqrt(2), order 0 only
        assert fc.m_tilde(B_CONST, [0.3, -0.8]) == pytest.approx(2 ** 0.25)

    def test_linear_at_origin(self):
        assert fc.m_tilde(B_MONT, [0.0, 0.0]) == pytest.approx(2 ** (1 / 6))

    def test_linear_off_axis_sums_orders(self):
        assert fc.m_tilde(B_MONT, [1.0, 0.0]) == pytest.approx(2 ** 0.25 + 2 ** (1 / 6))


class TestMExact:
    def test_constant_closed_form(self):
        # r^2 sqrt(2) = 1  =>  m = 2^(1/4)
        assert fc.m_exact(B_CONST, [0.0, 0.0]) == pytest.approx(2 ** 0.25, rel=1e-6)

    def test_linear_closed_form(self):
        # max over the cube is sqrt(2) r / 2, so r^3 sqrt(2)/2 = 1, m = 2^(-1/6)
        assert fc.m_exact(B_MONT, [0.0, 0.0]) == pytest.approx(2 ** (-1 / 6), rel=1e-6)

    def test_bisection_oracle_cross_check(self):
        # independent check: scalar bisection on the exact cube maximum
        x = np.array([0.4, 0.0])

        def cube_max(r):
            return math.sqrt(2) * (abs(x[0]) + r / 2)

        lo, hi = 1e-3, 1e3
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid * mid * cube_max(mid) <= 1.0:
                lo = mid
            else:
                hi = mid
        oracle = 1.0 / (0.5 * (lo + hi))
        assert fc.m_exact(B_MONT, x) == pytest.approx(oracle, rel=1e-6)

    def test_grows_with_beta(self):
        x = [0.2, 0.1]
        vals = [fc.m_exact(B_MONT.scale(b), x) for b in (1.0, 10.0, 100.0)]
        assert vals[0] < vals[1] < vals[2]

    def test_zero_field_raises(self):
        with pytest.raises(fc.ZeroFieldError):
            fc.m_exact(PolyMatrixField.from_upper(2, {(0, 1): ZERO}), [0, 0])

    def test_profile_matches_scalar(self):
        pts = np.array([[0.0, 0.0], [0.5, 0.2], [1.0, 0.0], [-0.3, 0.7]])
        prof = fc.m_profile(B_MONT, pts, samples=17)
        for p, v in zip(pts, prof):
            assert v == pytest.approx(fc.m_exact(B_MONT, p), rel=2e-3)


class TestMFunctionGrowth:
    def test_beta_scaling_floor(self):
        # min over the square of m(x, beta B) beta^(-1/3) stays bounded below
        rng = np.random.default_rng(5)
        pts = rng.uniform(-1, 1, size=(60, 2))
        floors = []
        for beta in (1e2, 1e3, 1e4):
            m = fc.m_profile(B_MONT.scale(beta), pts)
            floors.append((m * beta ** (-1 / 3)).min())
        assert min(floors) > 0.3
        assert max(floors) / min(floors) < 3.0


class TestTaylorModel:
    def test_constant_symmetric_gauge(self):
        md = fc.taylor_model(B_CONST, [0.7, -0.2])
        assert md.kappa == 0
        # A_j = sum_l x_l P_lj / 2
        assert md.A_model.components[0].terms == {(0, 1): -0.5}
        assert md.A_model.components[1].terms == {(1, 0): 0.5}

    def test_linear_model_rule(self):
        md = fc.taylor_model(B_MONT, [0.0, 0.0])
        assert md.kappa == 1
        assert md.A_model.components[1].terms == {(2, 0): pytest.approx(1 / 3)}
        assert md.A_model.components[0].terms == {(1, 1): pytest.approx(-1 / 3)}

    def test_curl_identity_random_points(self):
        rng = np.random.default_rng(23)
        for B in (B_CONST, B_MONT, B_QUAD):
            for _ in range(3):
                y = rng.uniform(-1, 1, size=2)
                md = fc.taylor_model(B, y)
                C = curl(md.A_model)
                for j in range(2):
                    for k in range(2):
                        assert (C.entry(j, k) - md.P.entry(j, k)).is_zero()

    def test_model_matches_taylor_part(self):
        md = fc.taylor_model(B_MONT, [0.5, 0.0])
        # at kappa=0 the model is the constant B(y)
        assert md.kappa == 0
        assert md.P.entry(0, 1).terms == {(0, 0): 0.5}


class TestInvariantSubspace:
    def test_linear(self):
        md = fc.taylor_model(B_MONT, [0.0, 0.0])
        np.testing.assert_allclose(np.abs(md.V_basis), [[0.0, 1.0]], atol=1e-12)

    def test_constant_full_space(self):
        V = fc.invariant_subspace(B_CONST, kappa=0)
        assert V.shape == (2, 2)

    def test_quadratic_single_direction(self):
        P = PolyMatrixField.from_upper(2, {(0, 1): X1 * X1})
        V = fc.invariant_subspace(P, kappa=2)
        np.testing.assert_allclose(np.abs(V), [[0.0, 1.0]], atol=1e-12)

    def test_translation_invariance_property(self):
        rng = np.random.default_rng(31)
        for B in (B_MONT, B_QUAD, PolyMatrixField.from_upper(2, {(0, 1): X1 * X1})):
            kappa = max(B.degree, 0)
            V = fc.invariant_subspace(B, kappa=kappa)
            pts = rng.uniform(-2, 2, size=(100, 2))
            for z in V:
                for x in pts:
                    px = B.frobenius(x)
                    pxz = B.frobenius(x + z)
                    assert abs(pxz - px) <= 1e-10 * (1 + abs(px))


class TestSigmaTau:
    def test_single_gradient(self):
        assert fc.sigma(B_MONT, [0.0, 0.0]) == pytest.approx(1.0)

    def test_linearity(self):
        B2 = PolyMatrixField.from_upper(2, {(0, 1): X1.scale(2.0)})
        assert fc.sigma(B2, [0.0, 0.0]) == pytest.approx(2.0)

    def test_diagonal_gradient(self):
        Bs = PolyMatrixField.from_upper(2, {(0, 1): X1 + X2})
        assert fc.sigma(Bs, [0.0, 0.0]) == pytest.approx(math.sqrt(2), rel=1e-9)

    def test_sigma_undefined_at_nonvanishing_point(self):
        with pytest.raises(ValueError):
            fc.sigma(B_MONT, [1.0, 0.0])

    def test_sampler_agrees_in_higher_codimension(self):
        # 3-D field with a 2-D orthogonal complement exercises the sampler
        d = 3
        x0 = Polynomial.variable(d, 0)
        x1 = Polynomial.variable(d, 1)
        B3 = PolyMatrixField.from_upper(d, {(0, 1): x0, (0, 2): x1})
        # gradients: e0 (pair 01) and e1 (pair 02); V = span{e2}; on the unit
        # circle in span{e0,e1} the objective is |cos| + |sin|, minimum 1
        assert fc.sigma(B3, [0, 0, 0]) == pytest.approx(1.0, rel=1e-6)

    def test_tau_examples(self):
        V = np.array([[0.0, 1.0]])
        assert fc.tau(V, [0.0, -1.0]) == pytest.approx(1.0)
        assert fc.tau(V, [-1.0, 0.0]) == pytest.approx(0.0, abs=1e-14)
        Vd = np.array([[1 / math.sqrt(2), 1 / math.sqrt(2)]])
        assert fc.tau(Vd, [0.0, -1.0]) == pytest.approx(1 / math.sqrt(2))


class TestNormalizeModel:
    def test_scale_factor(self):
        B2 = PolyMatrixField.from_upper(2, {(0, 1): X1.scale(2.0)})
        md = fc.taylor_model(B2, [0.0, 0.0])
        nm = fc.normalize_model(md)
        assert nm.normalization == pytest.approx(2.0)
        assert nm.P.entry(0, 1).terms == {(1, 0): pytest.approx(1.0)}

    def test_already_normalized_is_identity(self):
        md = fc.taylor_model(B_MONT, [0.0, 0.0])
        nm = fc.normalize_model(md)
        assert nm.normalization == pytest.approx(1.0)
        assert nm.P.entry(0, 1).terms == md.P.entry(0, 1).terms

    def test_zero_model_raises(self):
        md = fc.taylor_model(B_MONT, [0.0, 0.0])
        bad = fc.ModelData(y=md.y, kappa=md.kappa,
                           P=md.P.scale(0.0) if False else PolyMatrixField.from_upper(
                               2, {(0, 1): ZERO}),
                           A_model=md.A_model, V_basis=md.V_basis, sigma=None)
        with pytest.raises(fc.ZeroFieldError):
            fc.normalize_model(bad)


def test_m_comparability_small_corpus():
    # spot version of the corpus-wide bound; the full 200-point run is in
    # the acceptance suite
    rng = np.random.default_rng(41)
    fields = [B_CONST, B_MONT, B_QUAD]
    ratios = []
    for B in fields:
        pts = rng.uniform(-1.5, 1.5, size=(30, 2))
        m = fc.m_profile(B, pts, samples=17)
        mt = fc.m_tilde_profile(B, pts)
        ratios.extend((m / mt).tolist())
    assert max(ratios) <= 10.0 and min(ratios) >= 0.1
