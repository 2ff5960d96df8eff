"""SVG figures and flat segment lists for planar geometry."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np


def clip_segment(p, q, box):
    """Liang-Barsky clip of segment ``pq`` to ``box = ((x0, y0), (x1, y1))``; None if outside."""
    (x0, y0), (x1, y1) = box
    dx, dy = q[0] - p[0], q[1] - p[1]
    t0, t1 = 0.0, 1.0
    for den, num in ((-dx, p[0] - x0), (dx, x1 - p[0]), (-dy, p[1] - y0), (dy, y1 - p[1])):
        if den == 0:
            if num < 0:
                return None
            continue
        t = num / den
        if den < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return (p[0] + t0 * dx, p[1] + t0 * dy), (p[0] + t1 * dx, p[1] + t1 * dy)


def cone_polygons(V, P, y_lo: float, y_hi: float):
    """Each double cone clipped to ``y_lo <= y_2 <= y_hi`` as up to two triangles or trapezoids."""
    polys = []
    for (vx, vy), (a, b) in zip(V, P):
        ta, tb = math.tan(a), math.tan(b)
        for lo, hi in ((max(y_lo, vy), y_hi), (y_lo, min(y_hi, vy))):
            if hi <= lo:
                continue
            pts = []
            for y in (lo, hi):
                h = y - vy
                xs = sorted((vx + h * ta, vx + h * tb))
                pts.append((xs, y))
            (l0, r0), ylo = pts[0]
            (l1, r1), yhi = pts[1]
            polys.append([(l0, ylo), (r0, ylo), (r1, yhi), (l1, yhi)])
    return polys


def render_svg(
    polygons=(),
    segments=(),
    points=(),
    viewport=((-1.0, -1.0), (1.0, 1.0)),
    width: int = 800,
    note: str | None = None,
) -> str:
    """SVG 1.1 document; the y axis points up as in the plane."""
    (x0, y0), (x1, y1) = viewport
    sx = width / (x1 - x0)
    height = int(round((y1 - y0) * sx))

    def tx(x, y):
        return f"{(x - x0) * sx:.4f},{(y1 - y) * sx:.4f}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for poly in polygons:
        pts = " ".join(tx(x, y) for x, y in poly)
        out.append(f'<polygon points="{pts}" fill="#3060c0" fill-opacity="0.25" stroke="#203080" stroke-width="0.5"/>')
    for p, q in segments:
        c = clip_segment(p, q, viewport)
        if c is None:
            continue
        (a, b), (c2, d) = c
        out.append(
            f'<line x1="{(a - x0) * sx:.4f}" y1="{(y1 - b) * sx:.4f}" x2="{(c2 - x0) * sx:.4f}" '
            f'y2="{(y1 - d) * sx:.4f}" stroke="black" stroke-width="0.6"/>'
        )
    for x, y in points:
        if x0 <= x <= x1 and y0 <= y <= y1:
            out.append(f'<circle cx="{(x - x0) * sx:.4f}" cy="{(y1 - y) * sx:.4f}" r="1.5" fill="#c03030"/>')
    if note:
        out.append(f'<text x="8" y="16" font-size="12" font-family="sans-serif">{escape(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def forest_svg(forest, width: int = 800) -> str:
    """Final-generation cones clipped to ``|y_2 - top| <= 3R`` around the original cone."""
    D = forest.original
    R = forest.R if forest.R > 0 else 1.0
    top = forest.top
    y_lo, y_hi = top - 3 * R, top + 3 * R
    V, P = forest.final
    half = 3 * R * max(abs(math.tan(D.phi1)), abs(math.tan(D.phi2))) + R
    viewport = ((D.vertex[0] - half, y_lo), (D.vertex[0] + half, y_hi))
    polys = cone_polygons(V, P, y_lo, y_hi)
    return render_svg(polys, viewport=viewport, width=width, note="cones clipped to |y2 - top| <= 3R")


def write_segments(segments) -> str:
    """One ``x1 y1 x2 y2`` line per segment."""
    segs = np.asarray(segments, dtype=float).reshape(-1, 4)
    return "".join(f"{a!r} {b!r} {c!r} {d!r}\n" for a, b, c, d in segs.tolist())


def read_segments(text: str) -> np.ndarray:
    rows = [list(map(float, line.split())) for line in text.splitlines() if line.strip()]
    return np.array(rows, dtype=float).reshape(-1, 2, 2)
