"""Planar primitives: directed lines, double cones and their dual sectors.

Angles are measured clockwise from the positive y-axis, so the direction of
angle ``theta`` is ``u(theta) = (sin theta, cos theta)``.  A directed line is
stored as ``(theta, offset)`` and equals ``{p : <p, n(theta)> = offset}``
with left normal ``n(theta) = (-cos theta, sin theta)``.  With this choice the
signed distance ``<p, n> - offset`` is positive exactly when ``p`` lies to the
left of the line when walking along ``u(theta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DistanceOutOfRange, GeometryError, PointNotInDualCone

TOL = 1e-9
HALF_PI = 0.5 * math.pi


class Point2(NamedTuple):
    y1: float
    y2: float


def direction(theta: float) -> tuple[float, float]:
    return math.sin(theta), math.cos(theta)


def normal(theta: float) -> tuple[float, float]:
    return -math.cos(theta), math.sin(theta)


def _check_line_angle(theta: float) -> None:
    if not (-HALF_PI < theta < HALF_PI) or not math.isfinite(theta):
        raise GeometryError(f"line angle {theta!r} outside (-pi/2, pi/2)")


@dataclass(frozen=True)
class DirectedLine:
    theta: float
    offset: float

    def __post_init__(self):
        _check_line_angle(self.theta)

    @classmethod
    def through(cls, point, theta: float) -> "DirectedLine":
        nx, ny = normal(theta)
        return cls(theta, point[0] * nx + point[1] * ny)

    @property
    def normal(self) -> tuple[float, float]:
        return normal(self.theta)

    @property
    def direction(self) -> tuple[float, float]:
        return direction(self.theta)

    def point_at(self, s: float) -> Point2:
        """Point of the line at arc-length parameter ``s`` from its foot point."""
        nx, ny = self.normal
        ux, uy = self.direction
        return Point2(self.offset * nx + s * ux, self.offset * ny + s * uy)

    def x_at(self, y: float) -> float:
        """Abscissa of the line at height ``y`` (lines are never horizontal)."""
        nx, ny = self.normal
        return (self.offset - y * ny) / nx


@dataclass(frozen=True)
class DoubleCone:
    """``vertex + {(r sin t, r cos t) : r real, t in [phi1, phi2]}``."""

    vertex: Point2
    phi1: float
    phi2: float

    def __post_init__(self):
        object.__setattr__(self, "vertex", Point2(float(self.vertex[0]), float(self.vertex[1])))
        if not (-HALF_PI < self.phi1 < self.phi2 < HALF_PI):
            raise GeometryError(
                f"cone angles must satisfy -pi/2 < phi1 < phi2 < pi/2, got {self.phi1}, {self.phi2}"
            )
        if not all(math.isfinite(c) for c in self.vertex):
            raise GeometryError("cone vertex must be finite")

    @property
    def width(self) -> float:
        return self.phi2 - self.phi1

    def line(self, theta: float) -> DirectedLine:
        return DirectedLine.through(self.vertex, theta)

    @property
    def boundary(self) -> tuple[DirectedLine, DirectedLine]:
        return self.line(self.phi1), self.line(self.phi2)

    def translated(self, shift) -> "DoubleCone":
        return DoubleCone(
            Point2(self.vertex[0] + shift[0], self.vertex[1] + shift[1]), self.phi1, self.phi2
        )

    @property
    def unit_height_area(self) -> float:
        """Area of the upper nappe between the vertex level and one unit above it."""
        return 0.5 * (math.tan(self.phi2) - math.tan(self.phi1))


@dataclass(frozen=True)
class DualCone:
    """Closed upward sector ``vertex + {r u(t) : r >= 0, t in [phi2 - pi/2, phi1 + pi/2]}``."""

    vertex: Point2
    lo: float
    hi: float

    @classmethod
    def of(cls, cone: DoubleCone) -> "DualCone":
        return cls(cone.vertex, cone.phi2 - HALF_PI, cone.phi1 + HALF_PI)


@dataclass(frozen=True)
class Strip:
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (math.isfinite(self.y_lo) and math.isfinite(self.y_hi)):
            raise GeometryError("strip bounds must be finite")
        if not self.y_lo < self.y_hi:
            raise GeometryError(f"empty strip [{self.y_lo}, {self.y_hi}]")

    @property
    def height(self) -> float:
        return self.y_hi - self.y_lo


@dataclass(frozen=True)
class LineFamily:
    """The lines through ``vertex`` with angles in ``[phi1, phi2]``.

    These are exactly the full lines contained in the double cone: a line that
    misses the vertex crosses the vertex level at a point other than the vertex,
    and that point is outside the cone.
    """

    vertex: Point2
    phi1: float
    phi2: float

    def line(self, theta: float) -> DirectedLine:
        if not (self.phi1 - TOL <= theta <= self.phi2 + TOL):
            raise GeometryError(f"angle {theta} outside family range [{self.phi1}, {self.phi2}]")
        return DirectedLine.through(self.vertex, theta)

    @property
    def boundary(self) -> tuple[DirectedLine, DirectedLine]:
        return self.line(self.phi1), self.line(self.phi2)

    def contains(self, ell: DirectedLine, tol: float = TOL) -> bool:
        return (
            abs(signed_distance(self.vertex, ell)) <= tol
            and self.phi1 - tol <= ell.theta <= self.phi2 + tol
        )

    def sample(self, count: int) -> list[DirectedLine]:
        return [self.line(t) for t in np.linspace(self.phi1, self.phi2, count)]


def signed_distance(p, ell: DirectedLine) -> float:
    """Signed distance from ``p`` to ``ell``; positive on the left of the line."""
    nx, ny = normal(ell.theta)
    return p[0] * nx + p[1] * ny - ell.offset


def cone_contains(cone: DoubleCone, p, tol: float = TOL) -> bool:
    qx, qy = p[0] - cone.vertex[0], p[1] - cone.vertex[1]
    n1x, n1y = normal(cone.phi1)
    n2x, n2y = normal(cone.phi2)
    a = qx * n1x + qy * n1y
    b = qx * n2x + qy * n2y
    # inside the double cone the two boundary distances have opposite signs
    return (a <= tol and b >= -tol) or (a >= -tol and b <= tol)


def dual_contains(cone: DoubleCone, p, tol: float = TOL) -> bool:
    qx, qy = p[0] - cone.vertex[0], p[1] - cone.vertex[1]
    u1x, u1y = direction(cone.phi1)
    u2x, u2y = direction(cone.phi2)
    return qx * u1x + qy * u1y >= -tol and qx * u2x + qy * u2y >= -tol


def lines_in_cone(cone: DoubleCone) -> LineFamily:
    return LineFamily(cone.vertex, cone.phi1, cone.phi2)


def distance_interval(cone: DoubleCone, p, tol: float = TOL) -> tuple[float, float]:
    """Range of ``signed_distance(p, l)`` over lines ``l`` contained in ``cone``.

    For ``p`` in the dual sector the distance is nondecreasing as the line turns
    from the ``phi1`` boundary to the ``phi2`` boundary, so the range is spanned
    by the two boundary lines.
    """
    if not dual_contains(cone, p, tol):
        raise PointNotInDualCone(f"{tuple(p)} is not in the dual sector of {cone}")
    l1, l2 = cone.boundary
    return signed_distance(p, l1), signed_distance(p, l2)


def line_at_distance(cone: DoubleCone, p, t: float, tol: float = TOL) -> DirectedLine:
    """The unique line of ``cone`` whose signed distance from ``p`` is ``t``."""
    lo, hi = distance_interval(cone, p, tol)
    if t < lo - tol or t > hi + tol:
        raise DistanceOutOfRange(f"distance {t} outside [{lo}, {hi}]")
    if t <= lo:
        return cone.line(cone.phi1)
    if t >= hi:
        return cone.line(cone.phi2)
    theta = _solve_angle(p[0] - cone.vertex[0], p[1] - cone.vertex[1], t)
    return cone.line(min(max(theta, cone.phi1), cone.phi2))


def _solve_angle(qx, qy, t):
    # signed distance from q to the line through 0 at angle theta is |q| sin(theta - alpha)
    r = math.hypot(qx, qy)
    alpha = math.atan2(qx, qy)
    return alpha + math.asin(max(-1.0, min(1.0, t / r)))


def solve_angles(qx: np.ndarray, qy: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Vectorised ``_solve_angle``; callers clamp the result into their cone."""
    r = np.hypot(qx, qy)
    alpha = np.arctan2(qx, qy)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r > 0, t / np.where(r > 0, r, 1.0), 0.0)
    return alpha + np.arcsin(np.clip(ratio, -1.0, 1.0))


def distance_to_sector(p, vertex, lo: float, hi: float) -> float:
    """Euclidean distance from ``p`` to the closed sector ``vertex + {r u(t): r>=0, lo<=t<=hi}``.

    Requires ``hi - lo < pi`` so the sector is convex.
    """
    qx, qy = p[0] - vertex[0], p[1] - vertex[1]
    if qx == 0.0 and qy == 0.0:
        return 0.0
    ang = math.atan2(qx, qy)
    mid = 0.5 * (lo + hi)
    rel = math.remainder(ang - mid, 2.0 * math.pi)
    if abs(rel) <= 0.5 * (hi - lo):
        return 0.0
    best = math.inf
    for edge in (lo, hi):
        ux, uy = direction(edge)
        s = max(0.0, qx * ux + qy * uy)
        best = min(best, math.hypot(qx - s * ux, qy - s * uy))
    return best


def sector_distance(px, py, vx, vy, lo: float, hi: float) -> np.ndarray:
    """Vectorised ``distance_to_sector`` for arrays of points and one sector."""
    qx = np.asarray(px, dtype=float) - vx
    qy = np.asarray(py, dtype=float) - vy
    ang = np.arctan2(qx, qy)
    mid = 0.5 * (lo + hi)
    rel = np.abs(np.remainder(ang - mid + np.pi, 2.0 * np.pi) - np.pi)
    inside = rel <= 0.5 * (hi - lo)
    best = np.full(qx.shape, np.inf)
    for edge in (lo, hi):
        ux, uy = direction(edge)
        s = np.maximum(0.0, qx * ux + qy * uy)
        best = np.minimum(best, np.hypot(qx - s * ux, qy - s * uy))
    return np.where(inside, 0.0, best)
