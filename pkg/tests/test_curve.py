import math

import numpy as np
import pytest
from hypothesis import given, settings

from axihelfrich import geometry, shapes
from axihelfrich.curve import (
    G0,
    G1,
    GENERALIZED,
    INVALID,
    GeneratingCurve,
    derivatives,
    reparametrize_constant_speed,
    split_at_axis,
    symmetric_extension,
    validate,
)
from axihelfrich.errors import DegenerateInputError, NotApplicableError

from conftest import order, random_curves


def semicircle(n, t=None):
    t = np.linspace(0.0, 1.0, n) if t is None else t
    x = np.sin(math.pi * t)
    x[0] = x[-1] = 0.0
    return GeneratingCurve(x, -np.cos(math.pi * t))


def circle(n, R=2.0, r=1.0):
    t = np.linspace(0.0, 1.0, n)
    x, z = R + r * np.cos(2 * math.pi * t), r * np.sin(2 * math.pi * t)
    x[-1], z[-1] = x[0], z[0]
    return GeneratingCurve(x, z, closed=True)


class TestValidate:
    def test_semicircle_is_g0(self):
        assert validate(semicircle(256)).curve_class == G0

    def test_circle_is_g1(self):
        assert validate(circle(256)).curve_class == G1

    def test_tangent_spheres_are_generalized(self):
        c = shapes.tangent_spheres(2)
        report = validate(c)
        assert report.curve_class == GENERALIZED
        mid = report.axis_touches[0]
        assert c.x[mid] == 0.0

    def test_too_few_samples(self):
        with pytest.raises(DegenerateInputError):
            validate(semicircle(15))

    def test_nonuniform_sampling_flags_speed(self):
        c = semicircle(256, np.linspace(0, 1, 256) ** 2)
        report = validate(c)
        assert report.curve_class == INVALID
        assert "constant-speed" in report.violations

    def test_open_curve_off_axis(self):
        c = semicircle(256)
        c = GeneratingCurve(c.x + 0.1, c.z)
        report = validate(c)
        assert report.curve_class == INVALID and "axis-endpoints" in report.violations

    def test_negative_x(self):
        report = validate(circle(256, R=0.5))
        assert "x>=0" in report.violations


class TestReparametrize:
    def test_equal_chords(self):
        t = 0.5 - 0.5 * np.cos(math.pi * np.linspace(0, 1, 200))
        out = reparametrize_constant_speed(semicircle(200, t), 256)
        chords = out.chords
        assert np.max(np.abs(chords / chords.mean() - 1.0)) <= 1e-10

    def test_idempotent_on_uniform_circle(self):
        c = circle(256)
        out = reparametrize_constant_speed(c, 256)
        assert np.max(np.abs(out.points - c.points)) <= 1e-12

    def test_clustered_semicircle_length(self):
        t = 0.5 - 0.5 * np.cos(math.pi * np.linspace(0, 1, 400))
        out = reparametrize_constant_speed(semicircle(400, t), 512)
        assert abs(geometry.arc_length(out) - math.pi) <= 1e-4

    def test_zero_length(self):
        with pytest.raises(DegenerateInputError):
            reparametrize_constant_speed(GeneratingCurve(np.zeros(20), np.zeros(20)), 32)

    @settings(max_examples=25, deadline=None)
    @given(random_curves(n=128))
    def test_class_and_idempotence(self, c):
        once = reparametrize_constant_speed(c, 160)
        twice = reparametrize_constant_speed(once, 160)
        assert validate(once).curve_class == validate(c).curve_class
        assert np.max(np.abs(twice.points - once.points)) <= 1e-12 * c.length


class TestDerivatives:
    def test_sphere_speed(self):
        d = derivatives(shapes.sphere(512))
        assert np.max(np.abs(d.speed - math.pi)) <= 1e-3

    def test_torus_second_derivative(self):
        n = 512
        t = np.linspace(0.0, 1.0, n)
        d = derivatives(circle(n))
        w = 2 * math.pi
        exact = np.column_stack([-(w**2) * np.cos(w * t), -(w**2) * np.sin(w * t)])
        assert np.max(np.abs(d.second - exact)) <= 1e-3

    def test_straight_segment(self):
        c = GeneratingCurve(np.full(64, 1.0), np.linspace(0.0, 3.0, 64))
        assert np.max(np.abs(derivatives(c).second)) <= 1e-10

    def test_interior_speed_matches_length(self):
        c = shapes.spheroid(512, 1.0, 2.0)
        d = derivatives(c)
        assert np.max(np.abs(d.speed[1:-1] / c.length - 1.0)) <= 1e-4

    def test_convergence_order(self):
        errs = []
        for n in (64, 128, 256, 512):
            t = np.linspace(0.0, 1.0, n)
            d = derivatives(circle(n))
            w = 2 * math.pi
            exact = np.column_stack([-(w**2) * np.cos(w * t), -(w**2) * np.sin(w * t)])
            errs.append(np.max(np.abs(d.second - exact)))
        assert order(errs) >= 1.9


class TestSplit:
    def test_two_spheres(self):
        pieces = split_at_axis(shapes.tangent_spheres(2))
        assert len(pieces) == 2
        assert all(validate(p).curve_class == G0 for p in pieces)

    def test_plain_sphere_singleton(self):
        c = shapes.sphere(256)
        assert split_at_axis(c) == [c]

    def test_three_spheres_conserve(self):
        parent = shapes.tangent_spheres(3)
        pieces = split_at_axis(parent)
        assert len(pieces) == 3
        assert sum(geometry.area(p) for p in pieces) == pytest.approx(geometry.area(parent), rel=1e-8)
        assert sum(geometry.enclosed_volume(p) for p in pieces) == pytest.approx(
            geometry.enclosed_volume(parent), rel=1e-8
        )
        assert sum(p.length for p in pieces) == pytest.approx(parent.length, rel=1e-10)

    def test_closed_without_touch(self):
        c = circle(128)
        assert split_at_axis(c) == [c]


class TestSymmetricExtension:
    def test_sphere_gives_circle(self):
        poly = symmetric_extension(shapes.sphere(256))
        assert np.max(np.abs(np.hypot(poly[:, 0], poly[:, 1]) - 1.0)) <= 1e-12
        assert np.array_equal(poly[0], poly[-1])
        assert poly[:, 0].min() < -0.99

    def test_stadium(self):
        c = shapes.cylinder(128, 1.0, 4.0)
        c = GeneratingCurve(np.concatenate([[0.0], c.x, [0.0]]), np.concatenate([[c.z[0]], c.z, [c.z[-1]]]))
        poly = symmetric_extension(c)
        assert np.array_equal(poly[0], poly[-1])
        np.testing.assert_array_equal(poly[::-1, 0][: c.n], -poly[: c.n, 0])

    def test_closed_input(self):
        with pytest.raises(NotApplicableError):
            symmetric_extension(circle(64))

    @settings(max_examples=20, deadline=None)
    @given(random_curves(n=64, kind="g0"))
    def test_always_closed(self, c):
        poly = symmetric_extension(c)
        assert np.array_equal(poly[0], poly[-1])
