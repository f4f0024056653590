import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axihelfrich import geometry, shapes
from axihelfrich.curve import GeneratingCurve, SurfaceSystem
from axihelfrich.energy import MaterialParams, helfrich_energy
from axihelfrich.errors import NotApplicableError, PointOnCurveError, SingularNodeError

from conftest import FOUR_PI, order, random_curves, rel

TORUS_HSQ = 16 * math.pi**2 / math.sqrt(3)


class TestAreaVolume:
    def test_sphere_area(self, sphere512):
        assert rel(geometry.area(sphere512), FOUR_PI) <= 1e-5

    def test_torus_area(self, torus512):
        assert rel(geometry.area(torus512), 8 * math.pi**2) <= 1e-5

    def test_axis_curve_has_zero_area(self):
        c = GeneratingCurve(np.zeros(32), np.linspace(0.0, 1.0, 32))
        m = geometry.area_measure(c)
        assert m.total == 0.0
        assert np.all(m.weights == 0.0)

    def test_weights_nonnegative_and_zero_at_poles(self, sphere512):
        w = geometry.area_measure(sphere512).weights
        assert np.all(w >= 0.0)
        assert w[0] == 0.0 and w[-1] == 0.0

    def test_sphere_volume_and_reversal(self, sphere512):
        assert rel(geometry.enclosed_volume(sphere512), FOUR_PI / 3) <= 1e-5
        assert rel(geometry.enclosed_volume(sphere512.reversed()), -FOUR_PI / 3) <= 1e-5

    def test_torus_volume(self, torus512):
        assert rel(geometry.enclosed_volume(torus512), 4 * math.pi**2) <= 1e-5

    def test_canonical_orientation(self, sphere512):
        c, flipped = geometry.canonicalize_orientation(sphere512.reversed())
        assert flipped and geometry.enclosed_volume(c) > 0.0
        _, flipped = geometry.canonicalize_orientation(sphere512)
        assert not flipped


class TestCurvatures:
    def test_sphere(self, sphere512):
        f = geometry.curvatures(sphere512)
        assert np.max(np.abs(f.k1 - 1.0)) <= 1e-3
        assert np.max(np.abs(f.k2 - 1.0)) <= 1e-3
        assert f.k2[0] == f.k1[0] and f.k2[-1] == f.k1[-1]

    def test_torus(self, torus512):
        t = np.linspace(0.0, 1.0, 512)
        f = geometry.curvatures(torus512)
        c = np.cos(2 * math.pi * t)
        assert np.max(np.abs(f.k1 - 1.0)) <= 1e-3
        assert np.max(np.abs(f.k2 - c / (2 + c))) <= 1e-3

    def test_cylinder(self):
        f = geometry.curvatures(shapes.cylinder(128, 2.0, 5.0))
        assert np.max(np.abs(f.k1[1:-1])) <= 1e-9
        assert np.max(np.abs(np.abs(f.k2[1:-1]) - 0.5)) <= 1e-9

    def test_field_identities(self, torus512):
        f = geometry.curvatures(torus512)
        np.testing.assert_array_equal(f.H, f.k1 + f.k2)
        np.testing.assert_array_equal(f.K, f.k1 * f.k2)

    def test_interior_axis_node_is_singular(self):
        c = shapes.tangent_spheres(2)
        with pytest.raises(SingularNodeError, match="split_at_axis"):
            geometry.curvatures(GeneratingCurve(c.x, c.z))

    def test_curvature_convergence(self):
        errs = []
        for n in (64, 128, 256, 512):
            t = np.linspace(0.0, 1.0, n)
            c = np.cos(2 * math.pi * t)
            f = geometry.curvatures(shapes.torus(n))
            errs.append(np.max(np.abs(f.k2 - c / (2 + c))) + np.max(np.abs(f.k1 - 1.0)))
        assert order(errs) >= 1.9


class TestNorms:
    def test_sphere(self, sphere512):
        m = geometry.curvature_norms(sphere512)
        assert rel(m.int_k1sq, FOUR_PI) <= 1e-4
        assert rel(m.int_k2sq, FOUR_PI) <= 1e-4
        assert rel(m.int_K, FOUR_PI) <= 1e-4
        assert rel(m.int_Hsq, 4 * FOUR_PI) <= 1e-4

    def test_torus(self, torus512):
        m = geometry.curvature_norms(torus512)
        assert abs(m.int_K) / FOUR_PI <= 1e-5
        assert rel(m.int_Hsq, TORUS_HSQ) <= 1e-4

    def test_torus_hsq_against_independent_quadrature(self):
        # dense Gauss-Legendre on the analytic integrand 2*pi*x*|g'|*H^2, g'=2*pi
        u, w = np.polynomial.legendre.leggauss(200)
        t = 0.5 * (u + 1.0)
        c = np.cos(2 * math.pi * t)
        H = 1.0 + c / (2.0 + c)
        ref = 0.5 * np.sum(w * 2 * math.pi * (2.0 + c) * 2 * math.pi * H**2)
        assert rel(ref, TORUS_HSQ) <= 1e-12
        assert rel(geometry.curvature_norms(shapes.torus(512)).int_Hsq, ref) <= 1e-4


class TestGaussBonnet:
    def test_sphere(self, sphere512):
        r = geometry.gauss_bonnet_check(sphere512)
        assert r.expected == FOUR_PI and r.defect <= 1e-4 * FOUR_PI

    def test_torus(self, torus512):
        r = geometry.gauss_bonnet_check(torus512)
        assert r.expected == 0.0 and r.defect <= 1e-4 * FOUR_PI

    def test_prolate(self):
        r = geometry.gauss_bonnet_check(shapes.spheroid(512, 1.0, 2.0))
        assert r.defect <= 1e-3 * FOUR_PI

    def test_generalized_rejected(self):
        with pytest.raises(NotApplicableError):
            geometry.gauss_bonnet_check(shapes.tangent_spheres(2))

    @settings(max_examples=40, deadline=None)
    @given(random_curves(n=512))
    def test_random_curves(self, c):
        assert geometry.gauss_bonnet_check(c).defect <= 1e-3 * FOUR_PI


class TestDiameter:
    def test_sphere(self, sphere512):
        assert geometry.diameter(sphere512) == pytest.approx(2.0, abs=1e-6)

    def test_torus(self, torus512):
        assert geometry.diameter(torus512) == pytest.approx(6.0, abs=1e-6)

    def test_cylinder(self):
        assert geometry.diameter(shapes.cylinder(128, 1.0, 10.0)) == pytest.approx(math.sqrt(104.0), abs=1e-6)


class TestWinding:
    def ccw(self, cx=2.0, r=1.0, n=200):
        t = np.linspace(0.0, 2 * math.pi, n)
        return np.column_stack([cx + r * np.cos(t), r * np.sin(t)])

    def test_inside_outside(self):
        assert geometry.winding_index(self.ccw(), (2.0, 0.0)) == 1
        assert geometry.winding_index(self.ccw(), (5.0, 0.0)) == 0

    def test_on_curve(self):
        with pytest.raises(PointOnCurveError):
            geometry.winding_index(self.ccw(), (3.0, 0.0))

    def test_figure_eight_doubly_wound_lobe(self):
        # a limacon with an inner loop: the inner loop region is wound twice
        t = np.linspace(0.0, 2 * math.pi, 2001)
        r = 0.5 + np.cos(t)
        poly = np.column_stack([r * np.cos(t), r * np.sin(t)])
        p = (0.3, 0.0)

        def crossings(poly, p):
            # oracle: signed crossings of the ray to +x
            total = 0
            for a, b in zip(poly[:-1], poly[1:]):
                if (a[1] <= p[1] < b[1]) or (b[1] <= p[1] < a[1]):
                    xi = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
                    if xi > p[0]:
                        total += 1 if b[1] > a[1] else -1
            return total

        assert crossings(poly, p) == 2
        assert geometry.winding_index(poly, p) == 2

    def test_index_admissible(self):
        assert geometry.index_admissible(SurfaceSystem([shapes.sphere(128)]), 64)
        two = SurfaceSystem([shapes.sphere(128), shapes.sphere(128).translated(3.0)])
        assert geometry.index_admissible(two, 64)
        nested = SurfaceSystem([shapes.sphere(128), shapes.sphere(128, radius=0.5)])
        assert geometry.system_index(nested, (0.0, 0.0)) == 2
        assert not geometry.index_admissible(nested, 64)


class TestInvariances:
    @settings(max_examples=25, deadline=None)
    @given(random_curves(n=256))
    def test_orientation_reversal(self, c):
        r = c.reversed()
        a, b = geometry.curvatures(c), geometry.curvatures(r)
        assert geometry.area(r) == pytest.approx(geometry.area(c), rel=1e-12)
        assert geometry.enclosed_volume(r) == pytest.approx(-geometry.enclosed_volume(c), rel=1e-10)
        np.testing.assert_allclose(b.k1[::-1], -a.k1, atol=1e-9 * np.abs(a.k1).max())
        np.testing.assert_allclose(b.k2[::-1], -a.k2, atol=1e-9 * np.abs(a.k2).max())
        np.testing.assert_allclose(b.K[::-1], a.K, atol=1e-9 * np.abs(a.K).max())
        na, nb = geometry.curvature_norms(c), geometry.curvature_norms(r)
        assert nb.int_Hsq == pytest.approx(na.int_Hsq, rel=1e-10)
        p0 = MaterialParams(1.0, -1.0, 0.0)
        assert helfrich_energy(r, p0) == pytest.approx(helfrich_energy(c, p0), rel=1e-10)
        p1 = MaterialParams(1.0, -1.0, 1.5)
        assert helfrich_energy(r, p1) != pytest.approx(helfrich_energy(c, p1), rel=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(random_curves(n=256), st.sampled_from([0.5, 2.0, 3.0]))
    def test_scaling(self, c, lam):
        s = c.scaled(lam)
        assert geometry.area(s) == pytest.approx(lam**2 * geometry.area(c), rel=1e-6)
        assert geometry.enclosed_volume(s) == pytest.approx(lam**3 * geometry.enclosed_volume(c), rel=1e-6)
        a, b = geometry.curvatures(c), geometry.curvatures(s)
        np.testing.assert_allclose(b.k1, a.k1 / lam, rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(b.k2, a.k2 / lam, rtol=1e-6, atol=1e-9)
        assert geometry.curvature_norms(s).int_K == pytest.approx(geometry.curvature_norms(c).int_K, rel=1e-6, abs=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(random_curves(n=256), st.floats(-5.0, 5.0))
    def test_translation(self, c, dz):
        s = c.translated(dz)
        assert geometry.area(s) == pytest.approx(geometry.area(c), rel=1e-12)
        assert geometry.enclosed_volume(s) == pytest.approx(geometry.enclosed_volume(c), rel=1e-9)
        assert geometry.curvature_norms(s).int_Hsq == pytest.approx(geometry.curvature_norms(c).int_Hsq, rel=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(random_curves(n=256))
    def test_isoperimetric(self, c):
        A = geometry.area(c)
        V = abs(geometry.enclosed_volume(c))
        assert V <= A**1.5 / (6 * math.sqrt(math.pi)) * (1 + 1e-6)


class TestQuadratureOrder:
    @pytest.mark.parametrize(
        "make, quantity, exact",
        [
            (shapes.sphere, geometry.area, FOUR_PI),
            (shapes.sphere, geometry.enclosed_volume, FOUR_PI / 3),
            (shapes.torus, geometry.area, 8 * math.pi**2),
            (shapes.torus, lambda c: geometry.curvature_norms(c).int_Hsq, TORUS_HSQ),
        ],
    )
    def test_order_at_least_two(self, make, quantity, exact):
        ns = (64, 128, 256, 512, 1024)
        errs = [abs(quantity(make(n)) - exact) for n in ns]
        # already at rounding level: nothing left to converge
        if max(errs) < 1e-12 * exact:
            return
        assert order(errs, ns) >= 1.9
        assert all(b < a for a, b in zip(errs, errs[1:]))
