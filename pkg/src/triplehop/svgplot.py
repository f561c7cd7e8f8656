"""SVG renderers for packings, step functions and run traces.

Plain string assembly: exact geometry, no raster dependencies, diffable in
tests. All renderers return a complete SVG document as a string.
"""
from __future__ import annotations

import math

import numpy as np

from .autocorr import StepFunction, aci_fitness, autoconvolve
from .geometry import min_enclosing_side, unit_hex_vertices
from .hexpack import HexConfig


def _poly(points, fill, stroke, width) -> str:
    pts = " ".join(f"{x:.5f},{y:.5f}" for x, y in points)
    return (f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{width}" />')


def render_hex(config: HexConfig, scale: float = 60.0) -> str:
    """Container hexagon at the reported minimal side plus all unit hexagons."""
    verts = unit_hex_vertices(config.centers, config.angles)
    side = min_enclosing_side(verts.reshape(-1, 2))
    pad = 0.6
    half = (side + pad) * scale
    size = 2.0 * half

    def tx(p):
        return (half + p[0] * scale, half - p[1] * scale)

    container = [tx((side * math.cos(k * math.pi / 3.0),
                     side * math.sin(k * math.pi / 3.0))) for k in range(6)]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" '
             f'height="{size:.0f}" viewBox="0 0 {size:.2f} {size:.2f}">',
             _poly(container, "none", "#333333", 2.0)]
    for i in range(config.n):
        parts.append(_poly([tx(v) for v in verts[i]], "#7fb0d8", "#1f4e79", 1.0))
    parts.append(f'<text x="10" y="{size - 10:.0f}" font-family="monospace" '
                 f'font-size="16">L = {side:.4f}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def _polyline(xs, ys, color) -> str:
    pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5" />'


def _panel_ys(values, top, height) -> np.ndarray:
    vmax = float(np.max(values))
    vmax = vmax if vmax > 0 else 1.0
    return top + height - (np.asarray(values) / vmax) * (height - 12.0)


def render_aci(func: StepFunction, width: float = 640.0) -> str:
    """Two panels: the step function f, then its autoconvolution with C(f)."""
    g = autoconvolve(func)
    c = aci_fitness(func).c_value
    panel_h = 200.0
    size_h = 2 * panel_h + 40.0

    n = func.resolution
    xs_f = np.repeat(np.linspace(10.0, width - 10.0, n + 1), 2)[1:-1]
    ys_f = np.repeat(_panel_ys(func.values, 10.0, panel_h), 2)
    xs_g = np.linspace(10.0, width - 10.0, len(g))
    ys_g = _panel_ys(g, panel_h + 30.0, panel_h)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
             f'height="{size_h:.0f}" viewBox="0 0 {width:.0f} {size_h:.0f}">',
             _polyline(xs_f, ys_f, "#1f4e79"),
             _polyline(xs_g, ys_g, "#b05030"),
             f'<text x="10" y="{size_h - 6:.0f}" font-family="monospace" '
             f'font-size="14">C = {c:.5f}</text>',
             "</svg>"]
    return "\n".join(parts)


def render_trace(events: list[dict], width: float = 640.0,
                 height: float = 320.0) -> str:
    """Best-fitness-so-far polyline over trace events."""
    curve = []
    best = None
    for ev in events:
        if ev.get("accepted") and ev.get("fitness_after") is not None:
            best = ev["fitness_after"]
        if best is not None:
            curve.append(best)
    if not curve:
        curve = [0.0]
    lo, hi = min(curve), max(curve)
    span = (hi - lo) or 1.0
    xs = np.linspace(10.0, width - 10.0, len(curve))
    ys = [height - 20.0 - (v - lo) / span * (height - 40.0) for v in curve]
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        _polyline(xs, ys, "#1f4e79"),
        f'<text x="10" y="{height - 4:.0f}" font-family="monospace" '
        f'font-size="14">best fitness {curve[-1]:.6g}</text>',
        "</svg>",
    ])
