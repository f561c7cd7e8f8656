"""Exact planar geometry for regular hexagons.

Everything here is a pure function over immutable values. The container used
throughout is a flat-topped regular hexagon centered at the origin: vertices at
0, 60, ..., 300 degrees, so its three distinct outward edge-normal directions
sit at 30, 90 and 150 degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

SQRT3 = math.sqrt(3.0)
# Apothem of a regular hexagon with circumradius 1.
APOTHEM = SQRT3 / 2.0

# Unit normals of the flat-topped container edges (one per parallel edge pair).
_CONTAINER_NORMAL_ANGLES = (math.pi / 6.0, math.pi / 2.0, 5.0 * math.pi / 6.0)
CONTAINER_NORMALS = np.array(
    [[math.cos(a), math.sin(a)] for a in _CONTAINER_NORMAL_ANGLES]
)


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Hexagon:
    """Regular hexagon: center, rotation angle (radians), circumradius."""

    center: Point2
    angle: float
    circumradius: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.center[0]) and math.isfinite(self.center[1])):
            raise ValueError("hexagon center must be finite")
        if not math.isfinite(self.angle):
            raise ValueError("hexagon angle must be finite")
        if not (self.circumradius > 0.0 and math.isfinite(self.circumradius)):
            raise ValueError("circumradius must be positive and finite")


def hex_vertices(h: Hexagon) -> list[Point2]:
    """Vertices in counterclockwise order, vertex k at angle k*60deg + h.angle."""
    cx, cy = h.center
    out = []
    for k in range(6):
        a = h.angle + k * (math.pi / 3.0)
        out.append(Point2(cx + h.circumradius * math.cos(a),
                          cy + h.circumradius * math.sin(a)))
    return out


def _as_points_array(points: Iterable) -> np.ndarray:
    arr = np.asarray(list(points) if not isinstance(points, np.ndarray) else points,
                     dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0:
        raise ValueError("expected a non-empty list of 2D points")
    if not np.isfinite(arr).all():
        raise ValueError("point coordinates must be finite")
    return arr


def min_enclosing_side(points: Iterable) -> float:
    """Smallest side length L of an origin-centered flat-topped regular hexagon
    containing every point.

    Closed form: a point p is inside iff |p . n_k| <= L * sqrt(3)/2 for the three
    edge normals n_k, so L = max |p . n_k| * 2/sqrt(3).
    """
    arr = _as_points_array(points)
    proj = np.abs(arr @ CONTAINER_NORMALS.T)
    return float(proj.max() * 2.0 / SQRT3)


def _support_halfwidth(theta, phi, radius=1.0):
    """Projection half-width of a regular hexagon (rotation theta, given radius)
    onto the direction phi. Equals radius * cos(d) where d is the angular
    distance from phi to the nearest vertex direction, folded into [0, 30deg].
    """
    d = np.mod(theta - phi, np.pi / 3.0)
    d = np.minimum(d, np.pi / 3.0 - d)
    return radius * np.cos(d)


def penetration_depth(a: Hexagon, b: Hexagon) -> float:
    """Separating-axis depth across the 6 distinct edge-normal directions.

    Positive iff the interiors intersect; <= 0 means disjoint or touching, with
    magnitude the separation gap along the best axis.
    """
    axes = np.concatenate([
        a.angle + np.pi / 6.0 + np.arange(3) * (np.pi / 3.0),
        b.angle + np.pi / 6.0 + np.arange(3) * (np.pi / 3.0),
    ])
    nvec = np.stack([np.cos(axes), np.sin(axes)], axis=1)
    dc = np.array([b.center[0] - a.center[0], b.center[1] - a.center[1]])
    proj = np.abs(nvec @ dc)
    hw = (_support_halfwidth(a.angle, axes, a.circumradius)
          + _support_halfwidth(b.angle, axes, b.circumradius))
    return float((hw - proj).min())


def _hexagon_polygon(h: Hexagon) -> np.ndarray:
    k = np.arange(6) * (np.pi / 3.0)
    a = h.angle + k
    return np.stack([h.center[0] + h.circumradius * np.cos(a),
                     h.center[1] + h.circumradius * np.sin(a)], axis=1)


def _clip_halfplane(poly: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman step: keep the side to the left of the edge p1->p2."""
    edge = p2 - p1
    out = []
    m = len(poly)
    for i in range(m):
        cur = poly[i]
        prv = poly[i - 1]
        cur_in = edge[0] * (cur[1] - p1[1]) - edge[1] * (cur[0] - p1[0]) >= 0.0
        prv_in = edge[0] * (prv[1] - p1[1]) - edge[1] * (prv[0] - p1[0]) >= 0.0
        if cur_in != prv_in:
            d = cur - prv
            denom = edge[0] * d[1] - edge[1] * d[0]
            if denom != 0.0:
                t = (edge[0] * (p1[1] - prv[1]) - edge[1] * (p1[0] - prv[0])) / denom
                out.append(prv + t * d)
        if cur_in:
            out.append(cur)
    return np.array(out) if out else np.empty((0, 2))


def _shoelace(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def intersection_area(a: Hexagon, b: Hexagon) -> float:
    """Area of the intersection polygon, by convex clipping of b against a."""
    poly = _hexagon_polygon(b)
    clip = _hexagon_polygon(a)
    for i in range(6):
        poly = _clip_halfplane(poly, clip[i], clip[(i + 1) % 6])
        if len(poly) == 0:
            return 0.0
    return _shoelace(poly)


# ---------------------------------------------------------------------------
# Vectorized kernels for unit hexagons (circumradius 1), used by the packing
# problem where n configurations and all pairs are evaluated at once.
# ---------------------------------------------------------------------------

def unit_hex_vertices(centers: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """All 6 vertices of n unit hexagons; shape (n, 6, 2)."""
    k = np.arange(6) * (np.pi / 3.0)
    a = angles[:, None] + k[None, :]
    return centers[:, None, :] + np.stack([np.cos(a), np.sin(a)], axis=2)


def pair_depths(centers: np.ndarray, angles: np.ndarray,
                iu: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """SAT depth for every pair (i < j) of unit hexagons; shape (n*(n-1)/2,)."""
    n = len(angles)
    if iu is None:
        iu = np.triu_indices(n, 1)
    i, j = iu
    ti, tj = angles[i], angles[j]
    k3 = np.array([0.0, np.pi / 3.0, 2.0 * np.pi / 3.0])
    axes = np.concatenate([ti[:, None] + np.pi / 6.0 + k3,
                           tj[:, None] + np.pi / 6.0 + k3], axis=1)
    nvec = np.stack([np.cos(axes), np.sin(axes)], axis=2)
    dc = centers[j] - centers[i]
    proj = np.abs(np.einsum("pk,pak->pa", dc, nvec))
    hw = _support_halfwidth(ti[:, None], axes) + _support_halfwidth(tj[:, None], axes)
    return (hw - proj).min(axis=1)


def pair_depths_batch(centers_b: np.ndarray, angles_b: np.ndarray,
                      iu: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """pair_depths over a batch of configurations; shapes (B,n,2),(B,n) -> (B,p)."""
    i, j = iu
    ti, tj = angles_b[:, i], angles_b[:, j]
    k3 = np.array([0.0, np.pi / 3.0, 2.0 * np.pi / 3.0])
    axes = np.concatenate([ti[:, :, None] + np.pi / 6.0 + k3,
                           tj[:, :, None] + np.pi / 6.0 + k3], axis=2)
    nvec = np.stack([np.cos(axes), np.sin(axes)], axis=3)
    dc = centers_b[:, j] - centers_b[:, i]
    proj = np.abs(np.einsum("bpk,bpak->bpa", dc, nvec))
    hw = _support_halfwidth(ti[:, :, None], axes) + _support_halfwidth(tj[:, :, None], axes)
    return (hw - proj).min(axis=2)
