"""Slow, independent reference computations used to derive expected values."""
from __future__ import annotations

import itertools
import math

import numpy as np


def union_length(lefts, rights) -> float:
    order = np.argsort(lefts)
    total = 0.0
    cur_l = cur_r = None
    for i in order:
        l, r = lefts[i], rights[i]
        if cur_r is None or l > cur_r:
            if cur_r is not None:
                total += cur_r - cur_l
            cur_l, cur_r = l, r
        else:
            cur_r = max(cur_r, r)
    if cur_r is not None:
        total += cur_r - cur_l
    return total


def cross_section(cones, y):
    lefts, rights = [], []
    for (vx, vy), (p1, p2) in cones:
        h = y - vy
        a, b = vx + h * math.tan(p1), vx + h * math.tan(p2)
        lefts.append(min(a, b))
        rights.append(max(a, b))
    return np.array(lefts), np.array(rights)


def strip_area(cones, y0, y1) -> float:
    """Exact union area: the length is linear between consecutive critical heights.

    Critical heights are apexes and all pairwise crossings of boundary lines;
    on each piece the midpoint rule is exact.
    """
    lines = []
    ys = {y0, y1}
    for (vx, vy), (p1, p2) in cones:
        ys.add(vy)
        for p in (p1, p2):
            s = math.tan(p)
            lines.append((vx - vy * s, s))
    for (a1, s1), (a2, s2) in itertools.combinations(lines, 2):
        if s1 != s2:
            ys.add((a2 - a1) / (s1 - s2))
    ys = sorted(y for y in ys if y0 <= y <= y1)
    total = 0.0
    for lo, hi in zip(ys[:-1], ys[1:]):
        if hi > lo:
            l, r = cross_section(cones, 0.5 * (lo + hi))
            total += (hi - lo) * union_length(l, r)
    return total


def sector_distance_brute(p, vertex, lo, hi, count=20001, reach=50.0):
    """Distance to a closed sector by dense sampling of its boundary rays and interior test."""
    qx, qy = p[0] - vertex[0], p[1] - vertex[1]
    ang = math.atan2(qx, qy)
    if lo <= ang <= hi:
        return 0.0
    s = np.linspace(0.0, reach, count)
    best = math.inf
    for t in (lo, hi):
        px, py = s * math.sin(t), s * math.cos(t)
        best = min(best, float(np.min(np.hypot(px - qx, py - qy))))
    return best


def box_count_brute(segments, s, samples_per_cell=8):
    """Box count by dense sampling along each segment (coarse cross-check)."""
    cells = set()
    for (x0, y0), (x1, y1) in segments:
        length = math.hypot(x1 - x0, y1 - y0)
        n = max(2, int(length / s * samples_per_cell) + 2)
        t = np.linspace(0.0, 1.0, n)
        xs = np.floor((x0 + t * (x1 - x0)) / s).astype(int)
        ys = np.floor((y0 + t * (y1 - y0)) / s).astype(int)
        cells.update(zip(xs.tolist(), ys.tolist()))
    return len(cells)
