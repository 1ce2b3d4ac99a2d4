import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import isometries, loxodromics, points, random_isometry, random_point
from oracles import axis_distance_numeric, geodesic_length_integral, golden_min
from kfree.exceptions import GeometryError
from kfree.geometry import (
    INFINITY,
    ORIGIN,
    VERTICAL_AXIS,
    Geodesic,
    Isometry,
    LoxodromicData,
    Point,
    apply,
    classify,
    cylinder_radius,
    displacement,
    dist_point_to_line,
    distance,
    fixed_points,
    from_klein,
    line_distance,
    loxodromic,
    nearest_point_on_line,
    normalizer,
    point_at,
    point_on_line,
    to_klein,
    tube_displacement,
)

# Frozen from the arc-length quadrature in oracles.geodesic_length_integral.
UNIT_SHIFT_DISTANCE = 0.9624236501192072


class TestPoint:
    def test_rejects_nonpositive_height(self):
        with pytest.raises(ValueError):
            Point(0j, 0.0)
        with pytest.raises(ValueError):
            Point(0j, -1.0)

    def test_xyz_round_trip(self):
        p = Point.from_xyz(1.5, -2.0, 0.25)
        assert p.as_tuple() == (1.5, -2.0, 0.25)


class TestDistance:
    def test_same_point(self):
        assert distance(ORIGIN, ORIGIN) == 0.0

    def test_vertical(self):
        assert distance(ORIGIN, Point(0j, math.e)) == pytest.approx(1.0, abs=1e-15)

    def test_horizontal_unit_shift(self):
        d = distance(ORIGIN, Point(1 + 0j, 1.0))
        assert d == pytest.approx(UNIT_SHIFT_DISTANCE, abs=1e-12)
        assert d == pytest.approx(math.acosh(1.5), abs=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_arc_length_integral(self, seed):
        rng = np.random.default_rng(seed)
        p, q = random_point(rng), random_point(rng)
        assert distance(p, q) == pytest.approx(geodesic_length_integral(p, q), rel=1e-9, abs=1e-9)

    def test_metric_axioms_on_random_triples(self):
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            p, q, r = random_point(rng), random_point(rng), random_point(rng)
            pq, qr, pr = distance(p, q), distance(q, r), distance(p, r)
            assert pr <= pq + qr + 1e-9
            assert abs(pq - distance(q, p)) <= 1e-9
            assert pq >= 0
        assert distance(p, p) <= 1e-9

    def test_close_points_keep_precision(self):
        p = Point(0.3 + 0.1j, 2.0)
        q = Point(0.3 + 0.1j + 1e-9, 2.0)
        assert distance(p, q) == pytest.approx(0.5e-9, rel=1e-6)


class TestApply:
    def test_identity(self):
        assert apply(Isometry.identity(), ORIGIN) == ORIGIN

    def test_diagonal_scaling(self):
        p = apply(Isometry(2, 0, 0, 0.5), ORIGIN)
        assert p.z == 0 and p.t == pytest.approx(4.0)

    @given(isometries(), isometries(), points)
    def test_composition(self, g1, g2, p):
        lhs = apply(g1 @ g2, p)
        rhs = apply(g1, apply(g2, p))
        assert distance(lhs, rhs) <= 1e-10 * max(1.0, abs(lhs.z) + lhs.t + 1 / lhs.t)

    @given(isometries(), points, points)
    def test_isometry(self, g, p, q):
        assert distance(apply(g, p), apply(g, q)) == pytest.approx(distance(p, q), rel=1e-8, abs=1e-8)

    def test_sign_ambiguity(self):
        g = Isometry(1 + 1j, 2, 0.5j, 1)
        m = Isometry(-g.a, -g.b, -g.c, -g.d)
        p = Point(0.2 - 0.1j, 0.7)
        assert distance(apply(g, p), apply(m, p)) < 1e-14


class TestIsometry:
    def test_normalized_determinant(self):
        g = Isometry(2, 3, 1, 4)
        assert abs(g.a * g.d - g.b * g.c - 1) <= 1e-12

    def test_singular_rejected(self):
        with pytest.raises(GeometryError):
            Isometry(1, 2, 2, 4)

    def test_reals_round_trip(self):
        g = Isometry(1 + 2j, 0.5, -1j, 3)
        h = Isometry.from_reals(g.to_reals())
        assert g.distance_to(h) < 1e-15

    def test_from_reals_wrong_length(self):
        with pytest.raises(ValueError):
            Isometry.from_reals([1, 0, 0, 0, 0, 0])

    def test_power_and_inverse(self):
        g = Isometry(1 + 1j, 2, 0.5j, 1)
        assert (g.power(3) @ g.power(-3)).distance_to(Isometry.identity()) < 1e-12
        assert (g @ g.inverse()).distance_to(Isometry.identity()) < 1e-14


class TestDisplacement:
    def test_identity(self):
        assert displacement(Isometry.identity(), Point(1 + 1j, 0.3)) == 0.0

    def test_on_axis(self):
        g = Isometry(math.exp(0.5), 0, 0, math.exp(-0.5))
        assert displacement(g, ORIGIN) == pytest.approx(1.0, abs=1e-15)

    @given(loxodromics(), isometries(), points)
    def test_conjugation_invariance(self, g, h, p):
        lhs = displacement(g.conjugate_by(h), apply(h, p))
        assert lhs == pytest.approx(displacement(g, p), rel=1e-9, abs=1e-9)

    def test_tube_formula_matches_matrix_action(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            length = rng.uniform(0.05, 3)
            angle = rng.uniform(-math.pi, math.pi)
            h = random_isometry(rng)
            g = loxodromic(length, angle).conjugate_by(h)
            rho = rng.uniform(0, 2.5)
            p = apply(h, point_at(ORIGIN, (1.0, 0.0, 0.0), rho))
            assert displacement(g, p) == pytest.approx(tube_displacement(length, angle, rho), abs=1e-9)


class TestClassify:
    def test_identity(self):
        assert classify(Isometry.identity()).kind == "identity"
        assert classify(Isometry(-1, 0, 0, -1)).kind == "identity"

    def test_diagonal(self):
        c = classify(Isometry(2, 0, 0, 0.5))
        assert c.kind == "loxodromic"
        ld = c.loxodromic
        assert ld.length == pytest.approx(2 * math.log(2), abs=1e-15)
        assert ld.angle == pytest.approx(0.0, abs=1e-15)
        assert ld.axis == (0, INFINITY)

    def test_parabolic(self):
        assert classify(Isometry(1, 1, 0, 1)).kind == "parabolic"

    def test_elliptic(self):
        assert classify(Isometry(cmath.exp(0.3j), 0, 0, cmath.exp(-0.3j))).kind == "elliptic"

    def test_near_parabolic_is_indeterminate(self):
        # trace 2 + e^2 puts tr^2 about 4e-12 above 4
        e = 1e-6
        g = Isometry(1 + e, 1, 0, 1 / (1 + e))
        assert classify(g).kind == "indeterminate"

    def test_near_elliptic_is_indeterminate(self):
        g = Isometry(cmath.exp(0.3j + 1e-12), 0, 0, cmath.exp(-0.3j - 1e-12))
        assert classify(g).kind == "indeterminate"

    def test_pure_rotation_angle(self):
        mu = cmath.exp(complex(0.4, 0.9))
        ld = classify(Isometry(mu, 0, 0, 1 / mu)).loxodromic
        assert ld.length == pytest.approx(0.8, abs=1e-14)
        assert ld.angle == pytest.approx(1.8, abs=1e-14)

    @given(loxodromics(), isometries())
    def test_conjugation_invariance(self, g, h):
        a, b = classify(g), classify(g.conjugate_by(h))
        assert a.kind == b.kind == "loxodromic"
        assert a.loxodromic.length == pytest.approx(b.loxodromic.length, abs=1e-10 * max(1, a.loxodromic.length))

    @given(loxodromics())
    def test_axis_points_are_fixed_and_ordered(self, g):
        rep, att = fixed_points(g)
        for w in (rep, att):
            gw = g.mobius(w)
            if w == INFINITY:
                assert gw == INFINITY or abs(gw) > 1e8
            else:
                assert abs(gw - w) <= 1e-7 * max(1, abs(w))
        ld = classify(g).loxodromic
        assert ld.axis == (rep, att)
        # |g'| = |cz + d|^-2 is below 1 at the attracting end
        if att != INFINITY:
            assert abs(g.c * att + g.d) > 1
        if rep != INFINITY:
            assert abs(g.c * rep + g.d) < 1

    @given(loxodromics())
    def test_on_axis_displacement_is_length(self, g):
        ld = classify(g).loxodromic
        p = point_on_line(ld.axis, 0.3)
        assert displacement(g, p) == pytest.approx(ld.length, abs=1e-8)


class TestCylinderRadius:
    def test_boundary_is_empty(self):
        assert cylinder_radius(LoxodromicData(1.0, 0.0, VERTICAL_AXIS), 1.0) is None

    def test_below_length_is_empty(self):
        assert cylinder_radius(LoxodromicData(1.0, 0.5, VERTICAL_AXIS), 0.7) is None

    def test_closed_form(self):
        r = cylinder_radius(LoxodromicData(1.0, 0.0, VERTICAL_AXIS), 2.0)
        assert math.cosh(r) ** 2 == pytest.approx(math.sinh(1) ** 2 / math.sinh(0.5) ** 2, rel=1e-14)
        g = loxodromic(1.0, 0.0)
        assert displacement(g, point_at(ORIGIN, (0.3, -0.4, 0.0), r)) == pytest.approx(2.0, abs=1e-9)

    def test_monotone_in_lambda(self):
        ld = LoxodromicData(0.5, 0.0, VERTICAL_AXIS)
        radii = [cylinder_radius(ld, lam) for lam in np.linspace(0.6, 30, 50)]
        assert all(b > a for a, b in zip(radii, radii[1:]))
        assert radii[-1] > 13

    def test_rejects_nonpositive_lambda(self):
        with pytest.raises(ValueError):
            cylinder_radius(LoxodromicData(1.0, 0.0, VERTICAL_AXIS), 0.0)

    @given(st.floats(0.05, 3), st.floats(-math.pi + 1e-6, math.pi), st.floats(0.01, 3))
    def test_boundary_displacement_equals_lambda(self, length, angle, extra):
        lam = length + extra
        r = cylinder_radius(LoxodromicData(length, angle, VERTICAL_AXIS), lam)
        assert tube_displacement(length, angle, r) == pytest.approx(lam, abs=1e-9)


class TestLines:
    def test_on_axis(self):
        assert dist_point_to_line(ORIGIN, VERTICAL_AXIS) == 0.0

    def test_unit_offset(self):
        p = Point(1 + 0j, 1.0)
        oracle = golden_min(lambda s: distance(p, point_on_line(VERTICAL_AXIS, s)), -20, 20)
        assert dist_point_to_line(p, VERTICAL_AXIS) == pytest.approx(oracle, abs=1e-9)
        assert dist_point_to_line(p, VERTICAL_AXIS) == pytest.approx(math.asinh(1), abs=1e-14)

    @given(isometries(), points, st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3))
    def test_invariance(self, g, p, u, v):
        if abs(u - v) < 0.1:
            return
        line = Geodesic(u, v)
        image = line.image(g)
        assert dist_point_to_line(apply(g, p), image) == pytest.approx(dist_point_to_line(p, line), abs=1e-8)

    def test_nearest_point_realizes_distance(self):
        line = Geodesic(-1 + 0.5j, 2 + 0j)
        p = Point(0.3 + 1j, 0.4)
        q = nearest_point_on_line(p, line)
        assert dist_point_to_line(q, line) < 1e-9
        assert distance(p, q) == pytest.approx(dist_point_to_line(p, line), abs=1e-10)

    def test_normalizer_sends_line_to_vertical_axis(self):
        line = Geodesic(1 + 1j, -2 + 0j)
        h = normalizer(line)
        assert abs(h.mobius(line.start)) < 1e-12
        assert h.mobius(line.end) == INFINITY or abs(h.mobius(line.end)) > 1e12

    @pytest.mark.parametrize("seed", range(8))
    def test_line_distance_against_numeric(self, seed):
        rng = np.random.default_rng(seed)
        l1 = Geodesic(complex(*rng.normal(size=2)), complex(*rng.normal(size=2)))
        l2 = Geodesic(complex(*rng.normal(size=2)) + 2, complex(*rng.normal(size=2)) - 2j)
        assert line_distance(l1, l2) == pytest.approx(axis_distance_numeric(l1, l2), abs=1e-7)

    def test_line_distance_far_translate(self):
        u = 50.0
        d = line_distance(VERTICAL_AXIS, Geodesic(u, u + 1))
        assert d == pytest.approx(axis_distance_numeric(VERTICAL_AXIS, Geodesic(u, u + 1)), abs=1e-7)
        assert d > 4


class TestCharts:
    @given(points)
    def test_klein_round_trip(self, p):
        q = from_klein(to_klein(p))
        assert distance(p, q) < 1e-8
