import numpy as np
import pytest

from maglab import geometry as geo
from maglab.poly import Polynomial, PolyMatrixField

from conftest import X1, X2

DISK = geo.Disk((0.0, 0.0), 1.0)
SQUARE = geo.Rectangle((0.0, 0.0), (2.0, 2.0))
HSB = geo.HalfSpaceBox((0.0, -1.0), 4.0)
STAR = geo.SmoothStar((0.0, 0.0), 1.0, cos_coeffs=(0.2,), sin_coeffs=(0.0, 0.1))

B_MONT = PolyMatrixField.from_upper(2, {(0, 1): X1})
B_CONST = PolyMatrixField.from_upper(2, {(0, 1): Polynomial.constant(2, 1.0)})


class TestInside:
    def test_disk(self):
        assert geo.inside(DISK, [0.5, 0.0])
        assert not geo.inside(DISK, [1.0001, 0.0])

    def test_rectangle_edges(self):
        assert geo.inside(SQUARE, [0.999, 0.0])
        assert not geo.inside(SQUARE, [1.0001, 0.0])
        assert not geo.inside(SQUARE, [1.0, 0.0])   # open domain

    def test_half_space_box(self):
        assert geo.inside(HSB, [0.0, 0.5])
        assert not geo.inside(HSB, [0.0, -0.5])
        assert not geo.inside(HSB, [4.5, 0.5])
        assert not geo.inside(HSB, [0.0, 4.5])

    def test_star(self):
        rho0 = STAR.radius_at(0.0)
        assert geo.inside(STAR, [rho0 - 1e-6, 0.0])
        assert not geo.inside(STAR, [rho0 + 1e-6, 0.0])

    def test_analytic_agreement_random(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(-1.5, 1.5, size=(200, 2))
        np.testing.assert_array_equal(
            geo.inside_mask(DISK, pts), np.linalg.norm(pts, axis=1) < 1.0)
        np.testing.assert_array_equal(
            geo.inside_mask(SQUARE, pts), np.all(np.abs(pts) < 1.0, axis=1))

    def test_validation(self):
        with pytest.raises(ValueError):
            geo.Disk((0.0, 0.0), -1.0)
        with pytest.raises(ValueError):
            geo.HalfSpaceBox((0.0, -2.0), 1.0)
        with pytest.raises(ValueError):
            geo.SmoothStar((0.0, 0.0), 0.1, cos_coeffs=(0.5,))


class TestBoundarySample:
    def test_disk_normals_are_points(self):
        bs = geo.boundary_sample(DISK, 16)
        np.testing.assert_allclose(bs.points, bs.normals, atol=1e-14)

    def test_disk_weights_sum_exact(self):
        bs = geo.boundary_sample(DISK, 256)
        assert bs.weights.sum() == pytest.approx(2 * np.pi, abs=1e-6)

    def test_rectangle_axis_normals_and_no_corners(self):
        bs = geo.boundary_sample(SQUARE, 64)
        for n in bs.normals:
            assert sorted(np.abs(n)) == [0.0, 1.0]
        for p in bs.points:
            assert not (abs(abs(p[0]) - 1) < 1e-12 and abs(abs(p[1]) - 1) < 1e-12)
        assert bs.weights.sum() == pytest.approx(8.0, rel=1e-12)

    def test_unit_normals_and_convexity(self):
        for dom in (DISK, SQUARE):
            bs = geo.boundary_sample(dom, 64)
            np.testing.assert_allclose(np.linalg.norm(bs.normals, axis=1), 1.0,
                                       atol=1e-12)
            center = np.asarray(dom.center)
            assert (np.einsum("ij,ij->i", bs.normals, bs.points - center) > 0).all()

    def test_star_weights_approximate_length(self):
        coarse = geo.boundary_sample(STAR, 256).weights.sum()
        fine = geo.boundary_sample(STAR, 4096).weights.sum()
        assert coarse == pytest.approx(fine, rel=1e-3)

    def test_half_space_true_face_only(self):
        bs = geo.boundary_sample(HSB, 32)
        np.testing.assert_allclose(bs.points[:, 1], 0.0, atol=1e-12)
        np.testing.assert_allclose(bs.normals, [[0.0, -1.0]] * len(bs.points))
        assert bs.weights.sum() == pytest.approx(8.0, rel=1e-12)

    def test_count_floor(self):
        with pytest.raises(ValueError):
            geo.boundary_sample(DISK, 4)


class TestClassifyGamma:
    def test_montgomery_disk(self):
        g = geo.classify_gamma(B_MONT, DISK, interior_step=0.1, boundary_count=64)
        assert g.kappa_star == 1 and g.kappa_0 == 1
        assert all(abs(p[0]) < 1e-8 for p, _ in g.gamma1)
        poles = sorted(round(p[1]) for p, _, _ in g.gamma2)
        assert poles == [-1, 1]

    def test_constant_everywhere(self):
        g = geo.classify_gamma(B_CONST, DISK, 0.25, 32)
        assert g.kappa_star == 0 and g.kappa_0 == 0
        assert len(g.gamma1) > 0 and len(g.gamma2) == 32

    def test_nonvanishing_on_offset_disk(self):
        g = geo.classify_gamma(B_MONT, geo.Disk((2.0, 0.0), 1.0), 0.25, 32)
        assert g.kappa_star == 0 and g.kappa_0 == 0

    def test_monotone_under_refinement(self):
        coarse = geo.classify_gamma(B_MONT, DISK, 0.2, 32)
        fine = geo.classify_gamma(B_MONT, DISK, 0.1, 64)
        assert fine.kappa_star >= coarse.kappa_star
        assert fine.kappa_0 >= coarse.kappa_0

    def test_boundary_normals_attached(self):
        g = geo.classify_gamma(B_MONT, DISK, 0.2, 64)
        for p, _, n in g.gamma2:
            np.testing.assert_allclose(np.linalg.norm(n), 1.0, atol=1e-9)
            np.testing.assert_allclose(n, np.asarray(p), atol=1e-6)


def test_distance_to_boundary():
    assert geo.distance_to_boundary(DISK, [0.5, 0.0]) == pytest.approx(0.5)
    assert geo.distance_to_boundary(SQUARE, [0.25, 0.0]) == pytest.approx(0.75)
    assert geo.distance_to_boundary(HSB, [0.0, 0.5]) == pytest.approx(0.5)
