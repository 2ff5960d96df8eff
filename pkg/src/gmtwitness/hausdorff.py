"""Hausdorff distance, epsilon-nets and product metrics on placement spaces.

Points of a placement space are rows ``[x_1..x_n, r, rotation...]``.  The
distance between two rows is the maximum of the Euclidean distance of the
centres, the absolute difference of the scales and the rotation distance
(absolute angle difference on SO(2), geodesic angle on SO(3)).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from .errors import GeometryError, TagMismatch

TAGS = ("points", "scaled", "scaled_rotated", "hyperplane")


def so2_distance(a, b):
    """Absolute angular distance on the circle, in ``[0, pi]``."""
    d = np.remainder(np.asarray(a) - np.asarray(b) + np.pi, 2.0 * np.pi) - np.pi
    return np.abs(d)


def so3_distance(a, b):
    """Geodesic angle between rotations given as rotation vectors."""
    ra = Rotation.from_rotvec(np.atleast_2d(a))
    rb = Rotation.from_rotvec(np.atleast_2d(b))
    return (ra.inv() * rb).magnitude()


@dataclass(frozen=True)
class Layout:
    """Which columns of a cloud hold centre, scale and rotation."""

    n: int
    scale: bool = False
    rotation: bool = False

    @property
    def rot_dim(self) -> int:
        if not self.rotation:
            return 0
        return 1 if self.n == 2 else 3

    @property
    def width(self) -> int:
        return self.n + int(self.scale) + self.rot_dim


@dataclass
class FinitePointCloud:
    points: np.ndarray
    tag: str
    layout: Layout

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.tag not in TAGS:
            raise GeometryError(f"unknown base-space tag {self.tag!r}")
        if self.points.shape[0] == 0:
            raise GeometryError("a point cloud must be nonempty")
        if self.points.shape[1] != self.layout.width:
            raise GeometryError(
                f"cloud rows have {self.points.shape[1]} columns, layout needs {self.layout.width}"
            )
        if not np.all(np.isfinite(self.points)):
            raise GeometryError("cloud coordinates must be finite")

    def __len__(self):
        return self.points.shape[0]

    def to_json(self, tol: float | None = None) -> str:
        doc = {
            "tag": self.tag,
            "n": self.layout.n,
            "scale": self.layout.scale,
            "rotation": self.layout.rotation,
            "tol": tol,
            "points": self.points.tolist(),
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "FinitePointCloud":
        doc = json.loads(text)
        return cls(np.array(doc["points"]), doc["tag"], Layout(doc["n"], doc["scale"], doc["rotation"]))


def pairwise_distance(A: np.ndarray, B: np.ndarray, layout: Layout) -> np.ndarray:
    """Product-metric distance matrix between the rows of ``A`` and ``B``."""
    n = layout.n
    diff = A[:, None, :n] - B[None, :, :n]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    col = n
    if layout.scale:
        d = np.maximum(d, np.abs(A[:, None, col] - B[None, :, col]))
        col += 1
    if layout.rotation:
        if n == 2:
            d = np.maximum(d, so2_distance(A[:, None, col], B[None, :, col]))
        else:
            ra = Rotation.from_rotvec(A[:, col : col + 3])
            rb = Rotation.from_rotvec(B[:, col : col + 3])
            qa, qb = ra.as_quat(), rb.as_quat()
            dot = np.clip(np.abs(qa @ qb.T), 0.0, 1.0)
            d = np.maximum(d, 2.0 * np.arccos(dot))
    return d


def directed_distance(A: FinitePointCloud, B: FinitePointCloud, block: int = 2048) -> float:
    """``max_{a in A} min_{b in B} dist(a, b)``."""
    if A.tag != B.tag or A.layout != B.layout:
        raise TagMismatch(f"cannot compare a {A.tag!r} cloud with a {B.tag!r} cloud")
    if not A.layout.scale and not A.layout.rotation:
        dist, _ = cKDTree(B.points).query(A.points)
        return float(dist.max())
    worst = 0.0
    for s in range(0, len(A), block):
        best = np.full(min(block, len(A) - s), np.inf)
        for t in range(0, len(B), block):
            d = pairwise_distance(A.points[s : s + block], B.points[t : t + block], A.layout)
            best = np.minimum(best, d.min(axis=1))
        worst = max(worst, float(best.max()))
    return worst


def hausdorff_distance(A: FinitePointCloud, B: FinitePointCloud) -> float:
    return max(directed_distance(A, B), directed_distance(B, A))


def full_projection_check(K, centers, tol: float = 0.0) -> bool:
    """Does every sampled centre carry at least one placement within ``tol``?"""
    C = getattr(K, "centers", K)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    X = np.atleast_2d(np.asarray(centers, dtype=float))
    if X.size == 0:
        return True
    if C.size == 0:
        return False
    dist, _ = cKDTree(C).query(X)
    return bool(np.all(dist <= tol))


def _axis_centres(lo: float, hi: float, side: float) -> np.ndarray:
    count = max(1, math.ceil((hi - lo) / side - 1e-12))
    step = (hi - lo) / count
    return lo + step * (np.arange(count) + 0.5)


def epsilon_net(bounds: dict, eps: float) -> FinitePointCloud:
    """Cell-centred grid covering a product box within ``eps`` in the product metric.

    ``bounds`` has a ``"space"`` entry with one ``(lo, hi)`` pair per
    coordinate, and optional ``"scale": (lo, hi)`` and ``"rotation": True``
    entries (the rotation factor is the full circle for planar boxes and
    the full rotation group in space).
    """
    if not eps > 0:
        raise GeometryError("eps must be positive")
    space = [tuple(map(float, b)) for b in bounds["space"]]
    n = len(space)
    if any(not hi >= lo for lo, hi in space):
        raise GeometryError(f"bad bounds {space}")
    scale = bounds.get("scale")
    rotation = bool(bounds.get("rotation", False))
    # a cube of side s has half-diagonal s sqrt(n) / 2
    side = 2.0 * eps / math.sqrt(n)
    axes = [_axis_centres(lo, hi, side) for lo, hi in space]
    if scale is not None:
        axes.append(_axis_centres(float(scale[0]), float(scale[1]), 2.0 * eps))
    rot_rows = None
    if rotation:
        if n == 2:
            axes.append(_axis_centres(-math.pi, math.pi, 2.0 * eps))
        else:
            rot_rows = _so3_net(eps)
    grid = np.array(list(itertools.product(*axes)), dtype=float)
    if rot_rows is not None:
        grid = np.concatenate(
            [np.repeat(grid, len(rot_rows), axis=0), np.tile(rot_rows, (len(grid), 1))], axis=1
        )
    tag = "points"
    if scale is not None:
        tag = "scaled_rotated" if rotation else "scaled"
    elif rotation:
        tag = "hyperplane"
    return FinitePointCloud(grid, tag, Layout(n, scale is not None, rotation))


def _so3_net(eps: float) -> np.ndarray:
    """Rotation vectors whose geodesic eps-balls cover SO(3).

    A rotation vector grid with cube side ``s`` in the ball of radius pi has
    covering radius at most ``s sqrt(3) / 2`` in the rotation-vector norm,
    which bounds the geodesic distance from above.
    """
    side = 2.0 * eps / math.sqrt(3.0)
    ax = _axis_centres(-math.pi, math.pi, side)
    g = np.array(list(itertools.product(ax, ax, ax)))
    keep = np.linalg.norm(g, axis=1) <= math.pi + side * math.sqrt(3.0) / 2.0
    g = g[keep]
    return g
