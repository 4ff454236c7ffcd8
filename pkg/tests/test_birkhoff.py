"""Shortening-pass tests: reparametrization, replacement, homotopies.

Monotonicity and fixed-point behaviour are the load-bearing contracts:
lengths never increase along either homotopy, closed geodesics are fixed,
and the ordered variant lands on the uniform grid with one arc per cell.
"""

import numpy as np
import pytest

from orbiflow import atlas, birkhoff, cycles, geometry as geo
from orbiflow.cycles import CycleKind, OrderedCycle
from orbiflow.errors import SegmentTooLong


@pytest.fixture(scope="module")
def sphere_model():
    return atlas.round_sphere(1.0)


@pytest.fixture(scope="module")
def disk():
    return atlas.flat_disk(6.0, 4.0)


def quarter(a, b, n=24):
    th = np.linspace(a, b, n)
    return np.stack([np.cos(th), np.sin(th), 0 * th], axis=1)


def equator(model):
    return cycles.make_cycle(
        model, CycleKind.SINGLE_LOOP,
        [(0, quarter(-np.pi / 4, np.pi / 4)),
         (1, quarter(np.pi / 4, 3 * np.pi / 4)),
         (3, quarter(3 * np.pi / 4, 5 * np.pi / 4)),
         (4, quarter(5 * np.pi / 4, 7 * np.pi / 4))], n_half=2)


def l_shape(model):
    # one half at speed 1 (length 1), the other at speed 3 (length 3)
    half1 = np.array([[0.0, 0.0], [1.0, 0.0]])
    half2 = np.array([[1.0, 0.0], [1.0, 1.5], [0.0, 1.5], [0.0, 0.0]])
    return cycles.make_cycle(model, CycleKind.SINGLE_LOOP,
                             [(0, half1), (0, half2)], n_half=1)


def zigzag(model):
    zig = np.array([[0, 0], [0.5, 0.12], [1.0, 0.0], [1.4, -0.2], [1.8, 0.0],
                    [1.0, 0.8], [0, 0.0]], dtype=float)
    return cycles.make_cycle(model, CycleKind.SINGLE_LOOP,
                             [(0, zig[:5]), (0, zig[4:])], n_half=1)


class TestConstantSpeed:
    def test_already_constant(self, sphere_model):
        c = equator(sphere_model).cycle
        d, table = birkhoff.constant_speed(c)
        assert np.max(np.abs(table.values - table.knots)) < 1e-9
        assert cycles.pointwise_distance(c, d) < 1e-10

    def test_speeds_uniform(self, disk):
        c = l_shape(disk).cycle
        d, _ = birkhoff.constant_speed(c)
        sp = d.speeds()
        w = d.widths()
        assert np.ptp(sp[w > 1e-12][:np.searchsorted(d.t, 1.0)]) < 1e-9
        assert abs(d.length() - c.length()) < 1e-12

    def test_l_shape_speed_value(self, disk):
        # half one has length 1 over parameter length 1: speed 1 -> stays;
        # half two has length 3: constant speed 3 over [1, 2]
        c = l_shape(disk).cycle
        d, _ = birkhoff.constant_speed(c)
        n = d.n_half
        assert abs(float(d.speeds()[0]) - 1.0) < 1e-9
        assert abs(float(d.speeds()[n]) - 3.0) < 1e-9

    def test_zero_length_half(self, disk):
        p = atlas.OrbifoldPoint(0, np.zeros(2))
        half2 = np.array([[0, 0], [1, 0], [1, 1], [0, 0]], dtype=float)
        oc = cycles.make_cycle(disk, CycleKind.TWO_LOOPS,
                               [(0, np.zeros((2, 2))), (0, half2)], n_half=1)
        d, table = birkhoff.constant_speed(oc.cycle)
        assert abs(d.length() - oc.length()) < 1e-12
        # the degenerate half keeps its parametrization (identity table)
        assert np.max(np.abs(table(np.linspace(0, 1, 5))
                             - np.linspace(0, 1, 5))) < 1e-12


class TestGeodesicReplacement:
    def test_fixed_point_on_geodesic_cells(self, sphere_model):
        d, _ = birkhoff.constant_speed(equator(sphere_model).cycle)
        r = birkhoff.geodesic_replacement(d, 36)
        assert cycles.pointwise_distance(d, r) < 1e-9

    def test_zigzag_shortens(self, disk):
        d, _ = birkhoff.constant_speed(zigzag(disk).cycle)
        r = birkhoff.geodesic_replacement(d, 8)
        assert r.length() < d.length() - 1e-6
        r.validate()

    def test_too_coarse_raises(self, disk):
        big = cycles.make_cycle(
            disk, CycleKind.SINGLE_LOOP,
            [(0, np.array([[0, 0], [3.5, 0]])),
             (0, np.array([[3.5, 0.0], [0.0, 0.4], [0, 0]]))], n_half=1)
        d, _ = birkhoff.constant_speed(big.cycle)
        with pytest.raises(SegmentTooLong):
            birkhoff.geodesic_replacement(d, 2)

    def test_matches_homotopy_endpoint(self, disk):
        d, _ = birkhoff.constant_speed(zigzag(disk).cycle)
        fast = birkhoff.geodesic_replacement(d, 8)
        slow = birkhoff.replacement_homotopy(1.0, d, 8)
        assert cycles.pointwise_distance(fast, slow) < 1e-12


class TestRescaleHomotopy:
    def test_endpoints(self, disk):
        c = l_shape(disk).cycle
        d, _ = birkhoff.constant_speed(c)
        assert cycles.pointwise_distance(birkhoff.rescale_homotopy(0.0, c), c) == 0
        assert cycles.pointwise_distance(
            birkhoff.rescale_homotopy(1.0, c), d) < 1e-12

    def test_length_constant(self, disk):
        c = zigzag(disk).cycle
        L = c.length()
        for s in np.linspace(0, 1, 11):
            cy = birkhoff.rescale_homotopy(float(s), c)
            assert abs(cy.length() - L) < 1e-12
            cy.validate()


class TestReplacementHomotopy:
    def test_endpoints(self, disk):
        d, _ = birkhoff.constant_speed(zigzag(disk).cycle)
        s0 = birkhoff.replacement_homotopy(0.0, d, 8)
        assert cycles.pointwise_distance(s0, d) < 1e-12

    def test_monotone(self, disk):
        d, _ = birkhoff.constant_speed(zigzag(disk).cycle)
        prev = None
        for s in np.linspace(0, 1, 9):
            L = birkhoff.replacement_homotopy(float(s), d, 8).length()
            assert prev is None or L <= prev + 1e-12
            prev = L

    def test_geodesic_input_constant(self, sphere_model):
        d, _ = birkhoff.constant_speed(equator(sphere_model).cycle)
        L = d.length()
        for s in (0.0, 0.5, 1.0):
            assert abs(birkhoff.replacement_homotopy(s, d, 36).length()
                       - L) < 1e-9

    def test_lipschitz_preserved(self, disk):
        d, _ = birkhoff.constant_speed(zigzag(disk).cycle)
        L = d.max_speed()
        for s in (0.25, 0.5, 0.75, 1.0):
            out = birkhoff.replacement_homotopy(float(s), d, 8)
            assert out.max_speed() <= L + 1e-9


class TestOrderedBirkhoff:
    def test_uniform_fixed_point(self, sphere_model):
        oc = equator(sphere_model)
        trace, final = birkhoff.ordered_birkhoff(oc, 36)
        trace2, final2 = birkhoff.ordered_birkhoff(final, 36)
        assert cycles.pointwise_distance(final.cycle, final2.cycle) < 1e-9
        assert abs(final2.length() - final.length()) < 1e-12

    def test_final_uniform_breaks(self, disk):
        oc = zigzag(disk)
        _, final = birkhoff.ordered_birkhoff(oc, 12)
        n = 12
        expect = np.concatenate([np.arange(1, n + 1) / n,
                                 1 + np.arange(1, n + 1) / n])
        assert np.max(np.abs(final.breaks - expect)) < 1e-12
        assert final.is_aligned()
        assert final.length() <= oc.length() + 1e-12

    def test_schedules_sorted(self, disk):
        oc = zigzag(disk)
        trace, _ = birkhoff.ordered_birkhoff(oc, 12, samples_per_stage=5)
        for s, snap in trace:
            assert np.all(np.diff(snap.breaks) >= -1e-12)
            assert len(snap.breaks) in (6 * 12, 2 * 12)

    def test_trace_monotone(self, disk):
        oc = zigzag(disk)
        trace, _ = birkhoff.ordered_birkhoff(oc, 12, samples_per_stage=5)
        lens = [snap.cycle.length() for _, snap in trace]
        assert all(lens[i + 1] <= lens[i] + 1e-9 for i in range(len(lens) - 1))

    def test_small_segments_out(self, disk):
        oc = zigzag(disk)
        _, final = birkhoff.ordered_birkhoff(oc, 12)
        assert float(np.max(final.cycle.segment_lengths())) <= \
            oc.length() / 12 + 1e-9


class TestContinuity:
    def test_pointwise_continuity_in_input(self, disk, rng):
        # outputs of the pass stay within C * eps of each other for inputs
        # at pointwise distance eps
        base = zigzag(disk)
        d0, _ = birkhoff.constant_speed(base.cycle)
        out0 = birkhoff.geodesic_replacement(d0, 8)
        eps = 1e-3
        worst = 0.0
        for _ in range(10):
            c = base.cycle
            delta = rng.normal(scale=eps / 4, size=c.start.shape)
            pert = cycles.GCycle(c.model, c.kind, c.n_half, c.t,
                                 c.start + delta, c.vel, c.chart, c.junc)
            # rebuild velocities so arcs close up again
            ends = pert.ends()
            d1, _ = birkhoff.constant_speed(
                cycles.make_cycle(
                    disk, CycleKind.SINGLE_LOOP,
                    [(0, np.concatenate([pert.start[:pert.n_half],
                                         ends[pert.n_half - 1][None]])),
                     (0, np.concatenate([pert.start[pert.n_half:],
                                         ends[-1][None]]))],
                    n_half=1).cycle)
            din = cycles.pointwise_distance(d0, d1)
            out1 = birkhoff.geodesic_replacement(d1, 8)
            dout = cycles.pointwise_distance(out0, out1)
            if din > 0:
                worst = max(worst, dout / din)
        assert worst < 100.0
