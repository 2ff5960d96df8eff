"""Areas of cone unions in strips and disks, and box-counting dimension."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ._sweep import cone_union_areas
from .errors import GeometryError
from .planar import DoubleCone, Strip

MC_CHUNK = 1 << 16


def _cone_arrays(cones):
    """(V, P) arrays from a forest (final generation), a (V, P) pair or DoubleCones."""
    if hasattr(cones, "final") and hasattr(cones, "vertices"):
        return cones.final
    if isinstance(cones, tuple) and len(cones) == 2 and isinstance(cones[0], np.ndarray):
        return cones
    cones = list(cones)
    if isinstance(cones, list) and cones and not isinstance(cones[0], DoubleCone):
        cones = [getattr(c, "cone", c) for c in cones]
    V = np.array([[c.vertex[0], c.vertex[1]] for c in cones], dtype=float).reshape(-1, 2)
    P = np.array([[c.phi1, c.phi2] for c in cones], dtype=float).reshape(-1, 2)
    return V, P


def cone_array_profile(V: np.ndarray, P: np.ndarray, cuts: Sequence[float]) -> np.ndarray:
    """Exact union area of the cones between consecutive heights of ``cuts``."""
    cuts = np.asarray(cuts, dtype=float)
    if np.any(np.diff(cuts) <= 0):
        raise GeometryError("cut heights must be strictly increasing")
    areas, _ = cone_union_areas(V[:, 0], V[:, 1], P[:, 0], P[:, 1], cuts)
    return areas


def strip_union_area(cones, strip: Strip) -> float:
    """Exact area of the union of ``cones`` inside ``strip``.

    ``cones`` may be a cone forest (its last generation is measured), a list
    of :class:`DoubleCone` or translated cones, or a ``(vertices, angles)``
    pair of arrays.  The area is integrated exactly: between consecutive
    events the union of cross-section intervals has linear length.
    """
    V, P = _cone_arrays(cones)
    if V.shape[0] == 0:
        return 0.0
    return float(cone_array_profile(V, P, [strip.y_lo, strip.y_hi])[0])


@dataclass
class AreaRow:
    generation: int
    strip_lo: float
    strip_hi: float
    area: float
    bound: float
    tol: float = 1e-9

    @property
    def passed(self) -> bool:
        return self.area <= self.bound + self.tol


def forest_area_table(forest, tol: float = 1e-9) -> list[AreaRow]:
    """Per-generation, per-sub-strip areas of a forest against ``c' delta^2``.

    The last rows give the whole strip ``{top - R <= y_2 <= top}`` of the
    final generation against ``c' R^2 / N``.
    """
    N = len(forest.vertices) - 1
    rows = []
    if N == 0:
        return rows
    d = forest.delta
    top = forest.top
    bound = forest.c_prime * d * d
    for k in range(1, N + 1):
        V, P = forest.generation(k)
        cuts = [top - j * d for j in range(k, -1, -1)]
        areas = cone_array_profile(V, P, cuts)[::-1]
        for j, a in enumerate(areas, start=1):
            rows.append(AreaRow(k, top - j * d, top - (j - 1) * d, float(a), bound, tol))
    V, P = forest.final
    total = float(cone_array_profile(V, P, [top - forest.R, top])[0])
    rows.append(AreaRow(N, top - forest.R, top, total, forest.c_prime * forest.R ** 2 / N, tol))
    return rows


def area_rows_csv(rows: Iterable[AreaRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["generation", "strip_lo", "strip_hi", "area", "bound", "pass"])
    for r in rows:
        w.writerow([r.generation, repr(r.strip_lo), repr(r.strip_hi), repr(r.area), repr(r.bound), int(r.passed)])
    return buf.getvalue()


# ------------------------------------------------------------------ Monte Carlo
def monte_carlo_area(
    predicate: Callable[[np.ndarray], np.ndarray],
    bbox,
    n_samples: int,
    seed: int = 0,
    chunk: int = MC_CHUNK,
) -> tuple[float, float]:
    """Hit-or-miss estimate of the area of ``{p in bbox : predicate(p)}``.

    ``predicate`` takes an ``(k, 2)`` array and returns a boolean mask.  Sample
    blocks of ``MC_CHUNK`` points draw from independent child seeds, so the
    estimate depends only on ``seed`` and ``n_samples``; ``chunk`` only
    controls how many blocks are evaluated at once.
    """
    if n_samples < 1:
        raise GeometryError("n_samples must be at least 1")
    (x0, y0), (x1, y1) = bbox
    if not (x1 > x0 and y1 > y0):
        raise GeometryError(f"empty bounding box {bbox}")
    n_blocks = -(-n_samples // MC_CHUNK)
    seeds = np.random.SeedSequence(seed).spawn(n_blocks)
    hits = 0
    per_call = max(1, chunk // MC_CHUNK)
    for start in range(0, n_blocks, per_call):
        pts = []
        for b in range(start, min(n_blocks, start + per_call)):
            size = min(MC_CHUNK, n_samples - b * MC_CHUNK)
            u = np.random.default_rng(seeds[b]).random((size, 2))
            pts.append(np.column_stack([x0 + (x1 - x0) * u[:, 0], y0 + (y1 - y0) * u[:, 1]]))
        hits += int(np.count_nonzero(predicate(np.concatenate(pts))))
    area = (x1 - x0) * (y1 - y0)
    p = hits / n_samples
    return area * p, area * math.sqrt(p * (1.0 - p) / n_samples)


def cones_membership(V: np.ndarray, P: np.ndarray, tol: float = 0.0, block: int = 256):
    """Vectorised predicate: is a point in the union of the double cones?"""
    n1 = np.stack([-np.cos(P[:, 0]), np.sin(P[:, 0])], axis=1)
    n2 = np.stack([-np.cos(P[:, 1]), np.sin(P[:, 1])], axis=1)

    def predicate(pts):
        inside = np.zeros(pts.shape[0], dtype=bool)
        for s in range(0, V.shape[0], block):
            qx = pts[:, 0:1] - V[None, s : s + block, 0]
            qy = pts[:, 1:2] - V[None, s : s + block, 1]
            a = qx * n1[None, s : s + block, 0] + qy * n1[None, s : s + block, 1]
            b = qx * n2[None, s : s + block, 0] + qy * n2[None, s : s + block, 1]
            inside |= np.any(a * b <= tol, axis=1)
        return inside

    return predicate


def strip_monte_carlo(cones, strip: Strip, n_samples: int, seed: int = 0):
    """Monte Carlo counterpart of :func:`strip_union_area`."""
    V, P = _cone_arrays(cones)
    h_lo = strip.y_lo - V[:, 1]
    h_hi = strip.y_hi - V[:, 1]
    xs = []
    for h in (h_lo, h_hi):
        for col in (0, 1):
            xs.append(V[:, 0] + h * np.tan(P[:, col]))
    xs = np.concatenate(xs + [V[:, 0][(V[:, 1] >= strip.y_lo) & (V[:, 1] <= strip.y_hi)]])
    pad = 1e-9 * max(1.0, float(np.abs(xs).max()))
    bbox = ((float(xs.min()) - pad, strip.y_lo), (float(xs.max()) + pad, strip.y_hi))
    return monte_carlo_area(cones_membership(V, P), bbox, n_samples, seed)


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.radius ** 2

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


@dataclass
class DiskAreaReport:
    estimate: float
    stderr: float
    strip_bound: float
    disjoint: bool
    n_samples: int

    @property
    def upper(self) -> float:
        """Certified upper bound when available, else a 4-sigma Monte Carlo bound."""
        if self.disjoint:
            return 0.0
        return min(self.strip_bound, self.estimate + 4.0 * self.stderr)


def disk_intersection_area(cones, B: Disk, n_samples: int = 1_000_000, seed: int = 0) -> DiskAreaReport:
    """Area of ``B`` intersected with the union of the cones.

    Returns exactly zero when the disk misses every cone.  Otherwise a Monte
    Carlo estimate over the disk's bounding square is reported together with
    the exact union area of the horizontal strip spanning the disk, which
    bounds the disk part from above.
    """
    V, P = _cone_arrays(cones)
    cx, cy = B.center
    r = B.radius
    if V.shape[0] == 0:
        return DiskAreaReport(0.0, 0.0, 0.0, True, 0)
    near = np.zeros(V.shape[0], dtype=bool)
    for shift in (0.0, math.pi):
        lo, hi = P[:, 0] + shift, P[:, 1] + shift
        qx, qy = cx - V[:, 0], cy - V[:, 1]
        ang = np.arctan2(qx, qy)
        mid = 0.5 * (lo + hi)
        rel = np.abs(np.remainder(ang - mid + np.pi, 2 * np.pi) - np.pi)
        dist = np.full(V.shape[0], np.inf)
        for edge in (lo, hi):
            ux, uy = np.sin(edge), np.cos(edge)
            s = np.maximum(0.0, qx * ux + qy * uy)
            dist = np.minimum(dist, np.hypot(qx - s * ux, qy - s * uy))
        dist = np.where(rel <= 0.5 * (hi - lo), 0.0, dist)
        near |= dist < r
    if not near.any():
        return DiskAreaReport(0.0, 0.0, 0.0, True, 0)
    Vn, Pn = V[near], P[near]
    strip_bound = float(cone_array_profile(Vn, Pn, [cy - r, cy + r])[0])
    inner = cones_membership(Vn, Pn)

    def predicate(pts):
        in_disk = (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2 <= r * r
        out = np.zeros(pts.shape[0], dtype=bool)
        if in_disk.any():
            out[in_disk] = inner(pts[in_disk])
        return out

    est, se = monte_carlo_area(predicate, ((cx - r, cy - r), (cx + r, cy + r)), n_samples, seed)
    return DiskAreaReport(est, se, strip_bound, False, n_samples)


# ------------------------------------------------------------------ box counting
@dataclass
class BoxCountSeries:
    scales: list
    counts: list
    slope: float
    intercept: float
    residual: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["scale", "count"])
        for s, c in zip(self.scales, self.counts):
            w.writerow([repr(float(s)), int(c)])
        return buf.getvalue()


def dyadic_scales(k_lo: int = 4, k_hi: int = 10) -> list[float]:
    return [2.0 ** -k for k in range(k_lo, k_hi + 1)]


def _segment_cells(segs: np.ndarray, s: float) -> np.ndarray:
    """Integer cells ``floor(p / s)`` of the half-open boxes the segments meet.

    Every box a segment meets contains either one of its grid-line crossings
    (or endpoints) or the midpoint between two consecutive ones, so those
    points are enumerated for all segments at once.
    """
    m = segs.shape[0]
    p0 = segs[:, 0, :]
    dp = segs[:, 1, :] - p0
    ids = [np.arange(m), np.arange(m)]
    ts = [np.zeros(m), np.ones(m)]
    for ax in range(2):
        moving = dp[:, ax] != 0.0
        a = np.minimum(p0[:, ax], p0[:, ax] + dp[:, ax]) / s
        b = np.maximum(p0[:, ax], p0[:, ax] + dp[:, ax]) / s
        k_lo = np.ceil(a).astype(np.int64)
        cnt = np.where(moving, np.floor(b).astype(np.int64) - k_lo + 1, 0)
        cnt = np.maximum(cnt, 0)
        total = int(cnt.sum())
        if total == 0:
            continue
        idx = np.repeat(np.arange(m), cnt)
        start = np.repeat(np.cumsum(cnt) - cnt, cnt)
        k = k_lo[idx] + (np.arange(total) - start)
        ids.append(idx)
        ts.append(np.clip((k * s - p0[idx, ax]) / dp[idx, ax], 0.0, 1.0))
    idx = np.concatenate(ids)
    t = np.concatenate(ts)
    order = np.lexsort((t, idx))
    idx, t = idx[order], t[order]
    same = idx[1:] == idx[:-1]
    mid_idx = idx[1:][same]
    mid_t = 0.5 * (t[1:][same] + t[:-1][same])
    idx = np.concatenate([idx, mid_idx])
    t = np.concatenate([t, mid_t])
    pts = (p0[idx] + t[:, None] * dp[idx]) / s
    # snap crossings that rounding left a hair short of their grid line
    snapped = np.round(pts)
    cells = np.where(np.abs(pts - snapped) < 1e-9, snapped, np.floor(pts))
    return cells.astype(np.int64)


SEGMENT_BLOCK = 256


def _cell_keys(cells: np.ndarray, lo: np.ndarray, width: int) -> np.ndarray:
    return np.unique((cells[:, 0] - lo[0]) * width + (cells[:, 1] - lo[1]))


def box_counts(points=None, segments=None, scales: Sequence[float] = (), block: int = SEGMENT_BLOCK) -> list[int]:
    """Number of half-open dyadic boxes of each side met by the points and segments.

    Segments are processed in blocks whose distinct cell keys are merged, so
    memory stays bounded by the answer rather than by the crossing count.
    """
    pts = None if points is None else np.asarray(points, dtype=float).reshape(-1, 2)
    segs = None if segments is None else np.asarray(segments, dtype=float).reshape(-1, 2, 2)
    coords = [a.reshape(-1, 2) for a in (pts, segs) if a is not None and a.size]
    if not coords:
        return [0 for _ in scales]
    allc = np.concatenate(coords)
    counts = []
    for s in scales:
        lo = np.floor(allc.min(axis=0) / s).astype(np.int64) - 1
        width = int(np.floor(allc[:, 1].max() / s)) - int(lo[1]) + 2
        keys = []
        if pts is not None and pts.size:
            keys.append(_cell_keys(np.floor(pts / s).astype(np.int64), lo, width))
        if segs is not None and segs.size:
            for b in range(0, segs.shape[0], block):
                keys.append(_cell_keys(_segment_cells(segs[b : b + block], s), lo, width))
        counts.append(int(np.unique(np.concatenate(keys)).size))
    return counts


def box_dimension_estimate(points=None, segments=None, scales: Sequence[float] | None = None) -> BoxCountSeries:
    """Least-squares slope of ``log count`` against ``log(1/scale)`` on dyadic boxes."""
    scales = dyadic_scales() if scales is None else [float(s) for s in scales]
    if len(scales) < 4:
        raise GeometryError("box counting needs at least four scales")
    if any(not s > 0 for s in scales) or any(b >= a for a, b in zip(scales, scales[1:])):
        raise GeometryError("scales must be positive and strictly decreasing")
    n_pts = 0 if points is None else np.asarray(points).size
    n_seg = 0 if segments is None else np.asarray(segments).size
    if n_pts + n_seg == 0:
        raise GeometryError("geometry is empty")
    counts = box_counts(points, segments, scales)
    x = np.log(1.0 / np.asarray(scales))
    y = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return BoxCountSeries(scales, counts, float(slope), float(intercept), resid)


def cantor_segments(stage: int) -> np.ndarray:
    """Intervals of the middle-thirds Cantor set at ``stage`` as segments on ``y_2 = 0``."""
    lefts = np.array([0.0])
    width = 1.0
    for _ in range(stage):
        width /= 3.0
        lefts = np.concatenate([lefts, lefts + 2.0 * width])
    lefts.sort()
    z = np.zeros_like(lefts)
    return np.stack([np.stack([lefts, z], 1), np.stack([lefts + width, z], 1)], axis=1)
