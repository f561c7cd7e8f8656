"""Geometry kernels against independent oracles.

penetration_depth is cross-checked against the polygon-clipping area (the two
routes must agree on overlap/no-overlap for every random pair), and the
clipping area itself is cross-checked by Monte-Carlo point sampling.
"""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triplehop.geometry import (Hexagon, Point2, hex_vertices, intersection_area,
                                min_enclosing_side, penetration_depth)

SQRT3 = math.sqrt(3.0)


def hexa(x, y, angle=0.0, r=1.0):
    return Hexagon(Point2(x, y), angle, r)


def random_pair(rng):
    return (hexa(*rng.uniform(-2.5, 2.5, 2), rng.uniform(0, 2 * np.pi)),
            hexa(*rng.uniform(-2.5, 2.5, 2), rng.uniform(0, 2 * np.pi)))


def mc_area(a, b, samples=40_000_000, seed=0):
    """Monte-Carlo intersection area, sampling the overlap of the bounding boxes."""
    lo = np.maximum(np.array(a.center) - a.circumradius,
                    np.array(b.center) - b.circumradius)
    hi = np.minimum(np.array(a.center) + a.circumradius,
                    np.array(b.center) + b.circumradius)
    if (hi <= lo).any():
        return 0.0
    box = float(np.prod(hi - lo))

    def inside(pts, h):
        rel = pts - np.array(h.center)
        normals = h.angle + np.pi / 6 + np.arange(3) * (np.pi / 3)
        nv = np.stack([np.cos(normals), np.sin(normals)], axis=1)
        return (np.abs(rel @ nv.T) <= h.circumradius * SQRT3 / 2 + 1e-12).all(axis=1)

    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 5_000_000
    for start in range(0, samples, chunk):
        m = min(chunk, samples - start)
        pts = rng.uniform(lo, hi, size=(m, 2))
        hits += int(np.count_nonzero(inside(pts, a) & inside(pts, b)))
    return box * hits / samples


class TestHexVertices:
    def test_unit_at_origin(self):
        verts = hex_vertices(hexa(0, 0))
        expect = [(1, 0), (0.5, SQRT3 / 2), (-0.5, SQRT3 / 2),
                  (-1, 0), (-0.5, -SQRT3 / 2), (0.5, -SQRT3 / 2)]
        assert np.allclose(verts, expect, atol=1e-12)

    def test_translation_equivariance(self):
        base = np.array(hex_vertices(hexa(0, 0)))
        shifted = np.array(hex_vertices(hexa(2, 0)))
        assert np.allclose(shifted, base + [2, 0], atol=1e-12)

    def test_rotated_30_degrees(self):
        verts = hex_vertices(hexa(0, 0, math.pi / 6))
        for k, v in enumerate(verts):
            a = math.pi / 6 + k * math.pi / 3
            assert v.x == pytest.approx(math.cos(a), abs=1e-12)
            assert v.y == pytest.approx(math.sin(a), abs=1e-12)

    def test_distance_from_center(self):
        h = hexa(1.3, -0.4, 0.77, 2.5)
        for v in hex_vertices(h):
            d = math.hypot(v.x - 1.3, v.y + 0.4)
            assert d == pytest.approx(2.5, rel=1e-12)

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-6, 6))
    def test_angle_shift_permutes(self, x, y, angle):
        first = hex_vertices(hexa(x, y, angle))
        second = hex_vertices(hexa(x, y, angle + math.pi / 3))
        assert np.allclose(first[1:], second[:-1], atol=1e-9)


class TestMinEnclosingSide:
    def test_unit_hexagon_fills_itself(self):
        assert min_enclosing_side(hex_vertices(hexa(0, 0))) == pytest.approx(1.0, abs=1e-12)

    def test_single_origin_point(self):
        assert min_enclosing_side([(0.0, 0.0)]) == 0.0

    def test_point_topped_needs_larger_container(self):
        verts = hex_vertices(hexa(0, 0, math.pi / 6))
        assert min_enclosing_side(verts) == pytest.approx(2 / SQRT3, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            min_enclosing_side([])

    @given(st.integers(0, 5), st.booleans(), st.integers(1, 20))
    @settings(max_examples=60)
    def test_container_symmetry_invariance(self, sixth, reflect, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-3, 3, size=(8, 2))
        ref = min_enclosing_side(pts)
        a = sixth * math.pi / 3
        rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        moved = pts @ rot.T
        if reflect:
            moved = moved * [1, -1]
        assert min_enclosing_side(moved) == pytest.approx(ref, abs=1e-12)

    @given(st.floats(0.01, 100.0), st.integers(1, 20))
    @settings(max_examples=60)
    def test_scales_linearly(self, c, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-3, 3, size=(6, 2))
        assert min_enclosing_side(pts * c) == pytest.approx(
            c * min_enclosing_side(pts), rel=1e-12)


class TestPenetrationDepth:
    def test_honeycomb_neighbors_touch(self):
        d = penetration_depth(hexa(0, 0), hexa(0, SQRT3))
        assert abs(d) <= 1e-12
        assert intersection_area(hexa(0, 0), hexa(0, SQRT3)) <= 1e-9

    def test_known_overlap(self):
        d = penetration_depth(hexa(0, 0), hexa(0, 1.5))
        assert d == pytest.approx(SQRT3 - 1.5, abs=1e-12)
        assert intersection_area(hexa(0, 0), hexa(0, 1.5)) > 1e-9

    def test_far_apart_is_negative(self):
        d = penetration_depth(hexa(0, 0), hexa(10, 0))
        assert d < -5.0

    def test_symmetric(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            a, b = random_pair(rng)
            assert penetration_depth(a, b) == pytest.approx(
                penetration_depth(b, a), abs=1e-12)

    def test_sign_agrees_with_clipping_area(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            a, b = random_pair(rng)
            overlap_sat = penetration_depth(a, b) > 1e-9
            overlap_area = intersection_area(a, b) > 1e-9
            assert overlap_sat == overlap_area


class TestIntersectionArea:
    def test_self_intersection_is_own_area(self):
        h = hexa(0.3, -0.2, 0.5)
        assert intersection_area(h, h) == pytest.approx(3 * SQRT3 / 2, rel=1e-12)

    def test_partial_overlap_matches_monte_carlo(self):
        a, b = hexa(0, 0), hexa(0, 1.5)
        exact = intersection_area(a, b)
        approx = mc_area(a, b)
        assert exact == pytest.approx(approx, rel=1e-3)

    def test_disjoint_is_zero(self):
        assert intersection_area(hexa(0, 0), hexa(5, 5)) == 0.0
