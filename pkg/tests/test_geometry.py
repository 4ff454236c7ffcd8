"""Geometry kernel tests.

The spherical exponential is checked against an independent 4th-order ODE
integrator for the geodesic equation on the sphere (x'' = -|x'|^2 x / R^2);
everything else is exercised through round trips, metric axioms and
transport identities on seeded random data.
"""

import numpy as np
import pytest

from orbiflow import geometry as geo
from orbiflow.errors import (AntipodalPoints, BaseMismatch, NonUniqueGeodesic,
                             VectorTooLong)

SPHERE = geo.sphere(1.0)
FLAT = geo.FLAT
HYP = geo.hyperbolic(1.0)
SPACES = [FLAT, SPHERE, HYP, geo.sphere(2.5), geo.hyperbolic(0.7)]


def geodesic_ode_oracle(space, x0, v0, h=1e-4):
    """RK4 integration of the geodesic equation on the sphere of radius R.

    Independent of the closed forms under test: integrates
    x'' = -(|x'|^2 / R^2) x over unit time.
    """
    R = space.scale

    def acc(x, v):
        return -(v @ v) / R ** 2 * x

    n = int(round(1.0 / h))
    x, v = x0.astype(float).copy(), v0.astype(float).copy()
    for _ in range(n):
        k1x, k1v = v, acc(x, v)
        k2x, k2v = v + 0.5 * h * k1v, acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = v + 0.5 * h * k2v, acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = v + h * k3v, acc(x + h * k3x, v + h * k3v)
        x = x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return x


class TestExpMap:
    def test_flat_translation(self):
        out = geo.exp_map(np.zeros(2), geo.ModelVector(np.zeros(2), [1.0, 0.0]), FLAT)
        assert np.allclose(out, [1.0, 0.0])

    @pytest.mark.parametrize("space", SPACES)
    def test_zero_vector(self, space, rng):
        x = geo.random_point(space, rng)
        out = geo.exp_map(x, geo.ModelVector(x, np.zeros(space.dim)), space)
        assert np.allclose(out, x)

    def test_sphere_quarter_circle_vs_ode(self):
        north = np.array([0.0, 0.0, 1.0])
        v = np.array([np.pi / 2, 0.0, 0.0])
        got = geo.exp_map(north, geo.ModelVector(north, v), SPHERE)
        expect = geodesic_ode_oracle(SPHERE, north, v)
        assert np.allclose(got, [1.0, 0.0, 0.0], atol=1e-12)
        assert np.linalg.norm(got - expect) < 1e-8

    def test_sphere_random_vs_ode(self, rng):
        for _ in range(5):
            x = geo.random_point(SPHERE, rng)
            v = geo.random_tangent(SPHERE, x, rng, length=rng.uniform(0.1, 2.5))
            got = geo.bexp(SPHERE, x, v)
            expect = geodesic_ode_oracle(SPHERE, x, v)
            assert np.linalg.norm(got - expect) < 1e-8

    def test_too_long_raises(self):
        north = np.array([0.0, 0.0, 1.0])
        v = geo.ModelVector(north, [3.2, 0.0, 0.0])
        with pytest.raises(VectorTooLong):
            geo.exp_map(north, v, SPHERE)

    def test_base_mismatch(self):
        with pytest.raises(BaseMismatch):
            geo.exp_map(np.zeros(2), geo.ModelVector([1.0, 1.0], [1.0, 0.0]), FLAT)


class TestLogMap:
    def test_trivial(self):
        x = np.array([2.0, -1.0])
        assert np.allclose(geo.log_map(x, x, FLAT).components, 0.0)

    def test_flat_euclidean(self):
        v = geo.log_map(np.zeros(2), np.array([3.0, 4.0]), FLAT)
        assert np.allclose(v.components, [3.0, 4.0])
        assert abs(geo.norm(FLAT, v.components) - 5.0) < 1e-15

    @pytest.mark.parametrize("space", SPACES)
    def test_round_trip(self, space, rng):
        # 1000 pairs per space, exp(log) = target within 1e-10
        n = 1000
        xs = np.stack([geo.random_point(space, rng) for _ in range(n)])
        ls = rng.uniform(0.0, 0.8 * min(3.0, space.injectivity_radius), size=n)
        vs = np.stack([geo.random_tangent(space, xs[i], rng, ls[i])
                       for i in range(n)])
        ys = geo.bexp(space, xs, vs)
        back = geo.bexp(space, xs, geo.blog(space, xs, ys))
        # absolute 1e-10 on the sphere; relative on the hyperboloid where
        # ambient coordinates grow exponentially with distance
        mag = max(1.0, np.max(np.abs(ys)))
        assert np.max(np.abs(back - ys)) < 1e-10 * mag
        if space.curvature_sign >= 0:
            assert np.max(np.abs(back - ys)) < 1e-10

    def test_antipodal(self):
        n = np.array([0.0, 0.0, 1.0])
        with pytest.raises(AntipodalPoints):
            geo.log_map(n, -n, SPHERE)


class TestDistance:
    def test_coincident(self, rng):
        for space in SPACES:
            x = geo.random_point(space, rng)
            assert geo.distance(x, x, space) == 0.0

    def test_flat_diagonal(self):
        assert abs(geo.distance(np.zeros(2), np.ones(2), FLAT) - np.sqrt(2)) < 1e-15

    def test_sphere_poles(self):
        n = np.array([0.0, 0.0, 1.0])
        assert abs(geo.distance(n, -n, SPHERE) - np.pi) < 1e-12

    @pytest.mark.parametrize("space", SPACES)
    def test_metric_axioms(self, space, rng):
        pts = [geo.random_point(space, rng) for _ in range(30)]
        for _ in range(200):
            i, j, k = rng.integers(0, 30, size=3)
            a, b, c = pts[i], pts[j], pts[k]
            dab = geo.distance(a, b, space)
            assert abs(dab - geo.distance(b, a, space)) < 1e-10
            assert dab <= geo.distance(a, c, space) + geo.distance(c, b, space) + 1e-10


class TestGeodesicArc:
    def test_degenerate(self):
        arc = geo.geodesic_between(np.zeros(2), np.zeros(2), FLAT, (0.0, 0.0))
        assert arc.length == 0.0

    def test_flat_velocity(self):
        arc = geo.geodesic_between(np.zeros(2), np.array([2.0, 0.0]), FLAT)
        assert np.allclose(arc.velocity, [2.0, 0.0])
        assert abs(arc.length - 2.0) < 1e-15

    @pytest.mark.parametrize("space", SPACES)
    def test_length_equals_distance(self, space, rng):
        for _ in range(50):
            a = geo.random_point(space, rng)
            v = geo.random_tangent(space, a, rng,
                                   rng.uniform(0.01, 0.8 * min(2.0, space.convexity_radius)))
            b = geo.bexp(space, a, v)
            arc = geo.geodesic_between(a, b, space)
            assert abs(arc.length - geo.distance(a, b, space)) < 1e-10

    def test_sphere_midpoint_equidistant(self, rng):
        for _ in range(100):
            a = geo.random_point(SPHERE, rng)
            v = geo.random_tangent(SPHERE, a, rng, rng.uniform(0.1, 2.0))
            b = geo.bexp(SPHERE, a, v)
            arc = geo.geodesic_between(a, b, SPHERE)
            mid = arc.point(0.5)
            assert abs(geo.distance(a, mid, SPHERE)
                       - geo.distance(mid, b, SPHERE)) < 1e-10

    def test_antipodal_raises(self):
        n = np.array([0.0, 0.0, 1.0])
        with pytest.raises(NonUniqueGeodesic):
            geo.geodesic_between(n, -n, SPHERE)


class TestParallelTransport:
    def test_degenerate_arc(self, rng):
        x = geo.random_point(SPHERE, rng)
        w = geo.random_tangent(SPHERE, x, rng)
        arc = geo.GeodesicArc(SPHERE, x, np.zeros(3), (0.0, 1.0))
        out = geo.parallel_transport(geo.ModelVector(x, w), arc, SPHERE)
        assert np.allclose(out.components, w)

    def test_flat_identity(self, rng):
        x, w = rng.normal(size=2), rng.normal(size=2)
        arc = geo.geodesic_between(x, x + np.array([1.0, 2.0]), FLAT)
        out = geo.parallel_transport(geo.ModelVector(x, w), arc, FLAT)
        assert np.allclose(out.components, w)

    def test_sphere_self_transport(self):
        # transporting the initial velocity of a quarter circle gives the
        # terminal velocity of the arc
        x = np.array([0.0, 0.0, 1.0])
        v = np.array([np.pi / 2, 0.0, 0.0])
        arc = geo.GeodesicArc(SPHERE, x, v, (0.0, 1.0))
        out = geo.parallel_transport(geo.ModelVector(x, v), arc, SPHERE)
        assert np.linalg.norm(out.components - arc.velocity_at(1.0)) < 1e-10

    @pytest.mark.parametrize("space", SPACES)
    def test_isometry_of_tangent_spaces(self, space, rng):
        for _ in range(50):
            x = geo.random_point(space, rng)
            v = geo.random_tangent(space, x, rng, rng.uniform(0.05, 1.0))
            w1 = geo.random_tangent(space, x, rng, rng.uniform(0.1, 2.0))
            w2 = geo.random_tangent(space, x, rng, rng.uniform(0.1, 2.0))
            t1 = geo.btransport(space, x, v, w1)
            t2 = geo.btransport(space, x, v, w2)
            before = geo.ambient_dot(space, w1, w2)
            after = geo.ambient_dot(space, t1, t2)
            assert abs(before - after) < 1e-10


class TestIsometry:
    def test_identity(self, rng):
        for space in SPACES:
            x = geo.random_point(space, rng)
            assert np.allclose(geo.apply_isometry(geo.Isometry.identity(space), x), x)

    def test_flat_half_turn(self):
        g = geo.flat_rotation(np.pi)
        assert np.allclose(g.point(np.array([1.0, 0.0])), [-1.0, 0.0])

    @pytest.mark.parametrize("space", SPACES)
    def test_distance_invariance(self, space, rng):
        for _ in range(50):
            if space.curvature_sign == 0:
                g = geo.flat_rotation(rng.uniform(0, 2 * np.pi), rng.normal(size=2))
            else:
                c = geo.random_point(space, rng)
                g = geo.rotation_about(space, c, rng.uniform(0, 2 * np.pi))
            a = geo.random_point(space, rng)
            b = geo.random_point(space, rng)
            mag = max(1.0, space.scale,
                      np.max(np.abs([g.point(a), g.point(b)])))
            assert abs(geo.distance(g.point(a), g.point(b), space)
                       - geo.distance(a, b, space)) < 1e-12 * mag * 30

    @pytest.mark.parametrize("space", SPACES)
    def test_group_laws(self, space, rng):
        cs = [geo.random_point(space, rng) for _ in range(3)]
        gs = [geo.rotation_about(space, c, rng.uniform(0.3, 5.0)) for c in cs]
        x = geo.random_point(space, rng)
        # composition law
        assert np.allclose((gs[0] @ gs[1]).point(x), gs[0].point(gs[1].point(x)),
                           atol=1e-10)
        # inverse
        assert np.allclose((gs[2] @ gs[2].inverse()).point(x), x, atol=1e-10)
        # closure: composite still preserves distances
        h = gs[0] @ gs[1] @ gs[2]
        y = geo.random_point(space, rng)
        assert abs(geo.distance(h.point(x), h.point(y), space)
                   - geo.distance(x, y, space)) < 1e-10

    def test_vector_norm_invariance(self, rng):
        for space in SPACES:
            x = geo.random_point(space, rng)
            v = geo.random_tangent(space, x, rng, 1.7)
            g = geo.rotation_about(space, geo.random_point(space, rng), 1.1)
            gv = geo.apply_isometry(g, geo.ModelVector(x, v))
            assert abs(geo.norm(space, gv.components) - geo.norm(space, v)) < 1e-11

    def test_reflections(self, rng):
        g = geo.flat_reflection([0.0, 0.0], [1.0, 0.0])
        assert np.allclose(g.point(np.array([1.0, 2.0])), [1.0, -2.0])
        assert g.orientation == -1
        s = geo.sphere_reflection(SPHERE, np.array([0.0, 0.0, 1.0]))
        assert np.allclose(s.point(np.array([0.0, 0.0, 1.0])), [0.0, 0.0, -1.0])

    def test_hyperbolic_rotation_fixes_center(self, rng):
        c = geo.random_point(HYP, rng)
        g = geo.hyperbolic_rotation(HYP, c, 1.3)
        assert np.allclose(g.point(c), c, atol=1e-10)
        x = geo.random_point(HYP, rng)
        assert abs(geo.distance(g.point(x), x, HYP)
                   - 0.0) > 0 or np.allclose(x, c)
