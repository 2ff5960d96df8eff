"""Placement sets, skeleton unions and the explicit dense witnesses built from them.

A placement ``(x, r, T)`` puts the copy ``x + r T(S)`` of a skeleton ``S``.
This module assembles such unions and builds the explicit placement sets
and subspace families used as witnesses:

* :func:`snap_scaled` snaps scales so that ``proj x + r`` lands on ``eps Z``,
  which makes the union of copies of a subspace ``V`` lie on finitely many
  translates of it;
* :func:`rotation_cover` lists finitely many lines that every placed,
  rotated copy of a line can be moved onto by an ``eps``-small change of
  scale and rotation;
* :func:`tangent_family` places a ``k``-plane at exact distance ``r`` from
  ``x`` inside a fixed family of ``(k+1)``-planes;
* :func:`normalize_frame` and :func:`nikodym_patch` build a cone forest that
  contains a line at every distance from every point of a neighbourhood,
  while meeting a given disk in small area.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation
from scipy.stats import qmc

from .cones import DEFAULT_CONE_CAP, ConeForest, FinenessPolicy, iterate, witness_lines
from .errors import (
    ConeBudgetExceeded,
    CoverVerificationFailed,
    GeometryError,
    InfeasibleAperture,
    NoIntersectingHost,
    PunctureInsideBall,
    TagMismatch,
)
from .hausdorff import so2_distance
from .measure import Disk, disk_intersection_area
from .planar import HALF_PI, DoubleCone, Point2, sector_distance

ORTHO_TOL = 1e-12


# ---------------------------------------------------------------- subspaces
@dataclass
class AffineSubspace:
    """``V = v + V_0`` with ``V_0`` spanned by the orthonormal rows of ``basis``
    and ``v`` orthogonal to ``V_0``."""

    anchor: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        self.anchor = np.asarray(self.anchor, dtype=float).reshape(-1)
        n = self.anchor.size
        self.basis = np.asarray(self.basis, dtype=float).reshape(-1, n)
        if n not in (2, 3):
            raise GeometryError(f"ambient dimension {n} not supported")
        if self.basis.shape[0] >= n:
            raise GeometryError("subspace dimension must be below the ambient dimension")
        gram = self.basis @ self.basis.T
        if not np.allclose(gram, np.eye(self.k), atol=ORTHO_TOL):
            raise GeometryError("basis is not orthonormal")
        if self.k and np.max(np.abs(self.basis @ self.anchor)) > ORTHO_TOL * max(1.0, np.abs(self.anchor).max()):
            raise GeometryError("anchor must be orthogonal to the direction space")

    @classmethod
    def through(cls, point, directions=()) -> "AffineSubspace":
        """The affine span of ``point`` and ``point + directions``."""
        point = np.asarray(point, dtype=float).reshape(-1)
        dirs = np.asarray(directions, dtype=float).reshape(-1, point.size)
        if dirs.shape[0]:
            q, r = np.linalg.qr(dirs.T)
            if np.min(np.abs(np.diag(r))) < 1e-12:
                raise GeometryError("directions are linearly dependent")
            basis = q.T
            # re-orthogonalise once to push the Gram error to rounding level
            q2, _ = np.linalg.qr(basis.T)
            basis = q2.T * np.sign(np.diag(q2.T @ basis.T))[:, None]
        else:
            basis = np.zeros((0, point.size))
        anchor = point - basis.T @ (basis @ point)
        return cls(anchor, basis)

    @property
    def n(self) -> int:
        return self.anchor.size

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def contains_origin(self) -> bool:
        return float(np.linalg.norm(self.anchor)) <= 1e-12

    def project(self, x) -> np.ndarray:
        """Orthogonal projections of points onto the subspace."""
        x = np.asarray(x, dtype=float)
        rel = x - self.anchor
        return self.anchor + (rel @ self.basis.T) @ self.basis

    def distance(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.project(x), axis=-1)

    def contains(self, p, tol: float = 1e-9) -> bool:
        return bool(np.all(self.distance(np.atleast_2d(p)) <= tol))

    def to_dict(self) -> dict:
        return {"anchor": self.anchor.tolist(), "basis": self.basis.tolist()}

    @classmethod
    def from_dict(cls, doc) -> "AffineSubspace":
        return cls(np.array(doc["anchor"]), np.array(doc["basis"]))


def line_through(point, direction) -> AffineSubspace:
    return AffineSubspace.through(point, [direction])


# ---------------------------------------------------------------- placements
def rotation_matrices(rot: np.ndarray, n: int) -> np.ndarray:
    """Rotation matrices from angles (plane) or rotation vectors (space)."""
    if n == 2:
        c, s = np.cos(rot), np.sin(rot)
        return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    return Rotation.from_rotvec(np.asarray(rot).reshape(-1, 3)).as_matrix()


@dataclass(frozen=True)
class Placement:
    center: tuple
    scale: float = 1.0
    rotation: object = None


@dataclass
class PlacementSet:
    """Finite placement set over ``C x I`` (``scaled``), ``C x I x SO(n)``
    (``scaled_rotated``) or ``J x SO(n)`` (``hyperplane``)."""

    centers: np.ndarray
    scales: np.ndarray
    rotations: np.ndarray | None = None
    tag: str = "scaled"

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.scales = np.asarray(self.scales, dtype=float).reshape(-1)
        if self.rotations is not None:
            self.rotations = np.asarray(self.rotations, dtype=float)
            if self.n == 3:
                self.rotations = self.rotations.reshape(-1, 3)
            else:
                self.rotations = self.rotations.reshape(-1)
        if self.tag not in ("scaled", "scaled_rotated", "hyperplane"):
            raise GeometryError(f"unknown base-space tag {self.tag!r}")
        if self.centers.shape[0] != self.scales.size:
            raise GeometryError("one scale per centre required")
        if self.tag == "scaled" and self.rotations is not None:
            raise TagMismatch("a scaled placement set carries no rotations")
        if self.tag != "scaled" and (self.rotations is None or len(self.rotations) != len(self)):
            raise TagMismatch(f"a {self.tag} placement set needs one rotation per placement")
        if self.tag == "hyperplane":
            if np.any(self.scales < 0):
                raise GeometryError("hyperplane placements need r >= 0")
        elif np.any(self.scales <= 0):
            raise GeometryError("scaled copies need r > 0")

    @property
    def n(self) -> int:
        return self.centers.shape[1]

    def __len__(self):
        return self.centers.shape[0]

    def __getitem__(self, i) -> Placement:
        rot = None if self.rotations is None else self.rotations[i]
        if isinstance(rot, np.ndarray):
            rot = tuple(rot.tolist())
        elif rot is not None:
            rot = float(rot)
        return Placement(tuple(self.centers[i].tolist()), float(self.scales[i]), rot)

    def rows(self) -> np.ndarray:
        """Rows ``[x, r, rotation]`` for the product metric."""
        parts = [self.centers, self.scales[:, None]]
        if self.rotations is not None:
            parts.append(self.rotations.reshape(len(self), -1))
        return np.concatenate(parts, axis=1)

    def cloud(self):
        from .hausdorff import FinitePointCloud, Layout

        return FinitePointCloud(self.rows(), self.tag, Layout(self.n, True, self.rotations is not None))

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "centers": self.centers.tolist(),
            "scales": self.scales.tolist(),
            "rotations": None if self.rotations is None else self.rotations.tolist(),
        }

    @classmethod
    def from_dict(cls, doc) -> "PlacementSet":
        rot = doc.get("rotations")
        return cls(np.array(doc["centers"]), np.array(doc["scales"]), None if rot is None else np.array(rot), doc.get("tag", "scaled"))


@dataclass
class SkeletonSpec:
    """Pieces ``S_i`` given by vertex lists, each inside a declared subspace ``V_i``."""

    pieces: list
    subspaces: list

    def __post_init__(self):
        self.pieces = [np.atleast_2d(np.asarray(p, dtype=float)) for p in self.pieces]
        if len(self.pieces) != len(self.subspaces):
            raise GeometryError("one subspace per piece required")
        for p, V in zip(self.pieces, self.subspaces):
            if np.max(V.distance(p)) > ORTHO_TOL * max(1.0, float(np.abs(p).max())):
                raise GeometryError("skeleton piece leaves its declared subspace")

    @property
    def n(self) -> int:
        return self.pieces[0].shape[1]

    @classmethod
    def square_vertices(cls) -> "SkeletonSpec":
        """The 0-skeleton of the unit square centred at the origin."""
        pts = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
        return cls([[p] for p in pts], [AffineSubspace(np.array(p), np.zeros((0, 2))) for p in pts])

    @classmethod
    def segment_of(cls, V: AffineSubspace, half_length: float = 1.0) -> "SkeletonSpec":
        """A segment of the line ``V`` centred at the foot point of the origin."""
        if V.k != 1:
            raise GeometryError("segment_of needs a line")
        u = V.basis[0]
        return cls([[V.anchor - half_length * u, V.anchor + half_length * u]], [V])

    def to_dict(self) -> dict:
        return {
            "pieces": [p.tolist() for p in self.pieces],
            "subspaces": [V.to_dict() for V in self.subspaces],
        }


@dataclass
class Geometry:
    """Assembled union: isolated points, segments ``(m, 2, n)`` and polygon outlines."""

    points: np.ndarray
    segments: np.ndarray
    polygons: list = field(default_factory=list)
    resolution: float = 0.0

    def samples(self, resolution: float | None = None) -> np.ndarray:
        """Points plus segment samples spaced at most ``resolution`` apart."""
        h = resolution or self.resolution
        out = [self.points]
        if self.segments.size:
            a, b = self.segments[:, 0], self.segments[:, 1]
            length = np.linalg.norm(b - a, axis=1)
            counts = np.maximum(1, np.ceil(length / h).astype(int)) if h > 0 else np.ones(len(a), int)
            for i in range(len(a)):
                t = np.linspace(0.0, 1.0, counts[i] + 1)[:, None]
                out.append(a[i] + t * (b[i] - a[i]))
        return np.concatenate(out) if out else np.empty((0, 2))


def _transform(points, center, scale, R):
    return center + scale * points @ R.T


def assemble_union(K: PlacementSet, S: SkeletonSpec, resolution: float = 0.01) -> Geometry:
    """``Union over (x, r, T) in K of x + r T(S)``, keeping exact segment endpoints."""
    if not resolution > 0:
        raise GeometryError("resolution must be positive")
    if K.n != S.n:
        raise GeometryError("placements and skeleton live in different dimensions")
    n = K.n
    if K.rotations is None:
        R = np.broadcast_to(np.eye(n), (len(K), n, n))
    else:
        R = rotation_matrices(K.rotations, n)
    pts, segs, polys = [], [], []
    for piece in S.pieces:
        placed = K.centers[:, None, :] + K.scales[:, None, None] * np.einsum("mij,pj->mpi", R, piece)
        if piece.shape[0] == 1:
            pts.append(placed[:, 0, :])
        elif piece.shape[0] == 2:
            segs.append(placed)
        else:
            for poly in placed:
                polys.append(poly)
                segs.append(np.stack([poly, np.roll(poly, -1, axis=0)], axis=1))
    points = np.concatenate(pts) if pts else np.empty((0, n))
    segments = np.concatenate(segs) if segs else np.empty((0, 2, n))
    return Geometry(points, segments, polys, resolution)


# ---------------------------------------------------------------- snapping
def subspace_projection(V: AffineSubspace, x) -> np.ndarray:
    """``proj x``: the coordinate of ``x`` along ``v`` (zero when ``v = 0``)."""
    v = V.anchor
    vv = float(v @ v)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if vv == 0.0:
        return np.zeros(x.shape[0])
    return x @ v / vv


def snap_scaled(L: PlacementSet, V: AffineSubspace, eps: float) -> PlacementSet:
    """All ``(x, r)`` with ``(x, r')`` in ``L``, ``proj x + r`` in ``eps Z`` and ``|r - r'| <= eps``.

    Only positive scales are kept; since ``eps Z`` has two points in every
    closed interval of length ``2 eps``, at least one admissible ``r`` lies in
    ``(r', r' + eps]``, so every centre of ``L`` survives.
    """
    if not eps > 0:
        raise GeometryError("eps must be positive")
    if L.tag != "scaled":
        raise TagMismatch("snap_scaled works on placement sets over C x I")
    p = subspace_projection(V, L.centers)
    s = p + L.scales
    k_lo = np.ceil((s - eps) / eps).astype(np.int64) - 1
    k_hi = np.floor((s + eps) / eps).astype(np.int64) + 1
    idx, ks = [], []
    for i in range(len(L)):
        k = np.arange(k_lo[i], k_hi[i] + 1)
        idx.append(np.full(k.size, i))
        ks.append(k)
    idx = np.concatenate(idx)
    ks = np.concatenate(ks)
    r = ks * eps - p[idx]
    keep = (np.abs(r - L.scales[idx]) <= eps) & (r > 0)
    return PlacementSet(L.centers[idx[keep]], r[keep], None, "scaled")


def snapped_values(K: PlacementSet, V: AffineSubspace) -> np.ndarray:
    """Distinct values of ``proj x + r`` (rounded to the nearest grid multiple)."""
    return np.unique(subspace_projection(V, K.centers) + K.scales)


def snap_value_bound(L: PlacementSet, V: AffineSubspace, eps: float) -> int:
    p = subspace_projection(V, L.centers)
    spread_I = float(L.scales.max() - L.scales.min())
    spread_p = float(p.max() - p.min())
    return math.ceil((spread_I + 2 * eps + spread_p) / eps) + 1


# ---------------------------------------------------------------- rotation covers
@dataclass
class CoverFamily:
    """Lines ``{p : <p, (cos a, sin a)> = c}`` stored as ``(a, c)`` rows."""

    angles: np.ndarray
    offsets: np.ndarray
    eps: float
    angle_step: float
    offset_step: float
    offset_origin: float = 0.0
    report: dict = field(default_factory=dict)
    dimension: int = 1

    def __len__(self):
        return self.angles.size

    def lines(self) -> list[AffineSubspace]:
        out = []
        for a, c in zip(self.angles, self.offsets):
            w = np.array([math.cos(a), math.sin(a)])
            out.append(AffineSubspace(c * w, np.array([[-w[1], w[0]]])))
        return out

    def distance_to_family(self, pts) -> np.ndarray:
        """Distance from each point to the nearest family line."""
        pts = np.atleast_2d(pts)
        n_ang = self._n_angles
        best = np.full(pts.shape[0], np.inf)
        for j in range(n_ang):
            a = self.angle_step * j
            proj = pts[:, 0] * math.cos(a) + pts[:, 1] * math.sin(a)
            row = self._offset_rows[j]
            if row.size == 0:
                continue
            hi = np.clip(np.searchsorted(row, proj), 0, row.size - 1)
            lo = np.maximum(hi - 1, 0)
            d = np.minimum(np.abs(proj - row[lo]), np.abs(proj - row[hi]))
            best = np.minimum(best, d)
        return best

    def offset_error(self, j, c) -> np.ndarray:
        """Distance from offsets ``c`` to the stored offsets at normal-angle index ``j``."""
        j = np.atleast_1d(j)
        c = np.atleast_1d(np.asarray(c, dtype=float))
        err = np.full(c.shape, np.inf)
        for i in np.unique(j):
            row = self._offset_rows[int(i)]
            if row.size == 0:
                continue
            sel = j == i
            hi = np.clip(np.searchsorted(row, c[sel]), 0, row.size - 1)
            lo = np.maximum(hi - 1, 0)
            err[sel] = np.minimum(np.abs(c[sel] - row[lo]), np.abs(c[sel] - row[hi]))
        return err

    @property
    def _n_angles(self) -> int:
        return int(round(2 * math.pi / self.angle_step))

    @property
    def _offset_rows(self):
        rows = getattr(self, "_rows_cache", None)
        if rows is None:
            j = np.rint(self.angles / self.angle_step).astype(int)
            rows = [np.sort(self.offsets[j == i]) for i in range(self._n_angles)]
            self._rows_cache = rows
        return rows

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "angle_step": self.angle_step,
            "offset_step": self.offset_step,
            "offset_origin": self.offset_origin,
            "dimension": self.dimension,
            "lines": [[float(a), float(c)] for a, c in zip(self.angles, self.offsets)],
            "report": self.report,
        }


def _line_normal_form(V: AffineSubspace):
    """``(beta, d)`` with ``V = {p : <p, (cos beta, sin beta)> = d}``, ``d > 0``."""
    if V.n != 2 or V.k != 1:
        raise GeometryError("rotation covers are built for lines in the plane")
    d = float(np.linalg.norm(V.anchor))
    if d == 0.0:
        raise GeometryError("the line must not pass through the origin")
    return math.atan2(V.anchor[1], V.anchor[0]), d


def _box_support(C_box, a):
    """min and max of ``<x, (cos a, sin a)>`` over the box."""
    (x0, y0), (x1, y1) = C_box
    cx, cy = math.cos(a), math.sin(a)
    vals = [x0 * cx + y0 * cy, x0 * cx + y1 * cy, x1 * cx + y0 * cy, x1 * cx + y1 * cy]
    return min(vals), max(vals)


def rotation_cover(
    V: AffineSubspace,
    C_box,
    I,
    eps: float,
    samples: int = 10_000,
    seed: int = 0,
    tol: float = 1e-9,
) -> CoverFamily:
    """Finitely many lines onto which every placed, rotated copy of ``V`` can be snapped.

    With ``V = {<p, w_beta> = d}``, the copy ``x + r T_a(V)`` is the line with
    normal angle ``a + beta`` and offset ``<x, w_{a+beta}> + r d``.  Normal
    angles are snapped to a grid of step at most ``eps`` and offsets to a grid
    of step ``d eps / 2``, so the snapped copy is reached by moving the
    rotation by at most ``eps / 2`` and the scale by at most ``eps / 2``.
    The offset grid is anchored at ``d * min(I)`` and its step never exceeds
    ``d |I|``, so every window of admissible scales contains a grid offset.
    """
    if not eps > 0:
        raise GeometryError("eps must be positive")
    beta, d = _line_normal_form(V)
    i_lo, i_hi = float(I[0]), float(I[1])
    if not 0 < i_lo <= i_hi:
        raise GeometryError("scale interval must be positive")
    n_ang = math.ceil(2 * math.pi / eps)
    da = 2 * math.pi / n_ang
    h = d * min(eps / 2.0, i_hi - i_lo) if i_hi > i_lo else d * eps / 2.0
    c0 = d * i_lo
    angles, offsets = [], []
    for j in range(n_ang):
        a = da * j
        lo, hi = _box_support(C_box, a)
        k = np.arange(math.floor(lo / h), math.ceil((hi + d * (i_hi - i_lo)) / h) + 1)
        angles.append(np.full(k.size, a))
        offsets.append(c0 + k * h)
    fam = CoverFamily(np.concatenate(angles), np.concatenate(offsets), eps, da, h, c0)
    fam.report = verify_rotation_cover(fam, V, C_box, I, samples, seed, tol)
    if not fam.report["passed"]:
        raise CoverVerificationFailed("rotation cover failed sampling", fam.report["counterexample"])
    return fam


def snap_to_cover(fam: CoverFamily, V: AffineSubspace, x, r, a, I):
    """Snap placements ``(x, r, a)`` to ``(r', a')`` whose copies are family lines.

    Returns ``(r', a', line_index_angle, line_offset)`` arrays.
    """
    beta, d = _line_normal_form(V)
    x = np.atleast_2d(x)
    gamma = np.remainder(np.asarray(a) + beta, 2 * np.pi)
    j = np.remainder(np.rint(gamma / fam.angle_step).astype(np.int64), fam._n_angles)
    g2 = j * fam.angle_step
    a2 = g2 - beta
    base = x[:, 0] * np.cos(g2) + x[:, 1] * np.sin(g2)
    h, c0 = fam.offset_step, fam.offset_origin
    c_lo = np.ceil((base + d * I[0] - c0) / h - 1e-9)
    c_hi = np.floor((base + d * I[1] - c0) / h + 1e-9)
    c = np.clip(np.rint((base + d * np.asarray(r) - c0) / h), c_lo, c_hi)
    off = c0 + c * h
    r2 = (off - base) / d
    return r2, a2, g2, off


def verify_rotation_cover(fam, V, C_box, I, samples=10_000, seed=0, tol=1e-9) -> dict:
    """Sample ``(x, r, T)`` and check a snapped copy within ``eps`` lies in the family."""
    rng = np.random.default_rng(seed)
    (x0, y0), (x1, y1) = C_box
    x = np.column_stack([rng.uniform(x0, x1, samples), rng.uniform(y0, y1, samples)])
    r = rng.uniform(I[0], I[1], samples)
    a = rng.uniform(-math.pi, math.pi, samples)
    r2, a2, g2, c = snap_to_cover(fam, V, x, r, a, I)
    move = np.maximum(np.abs(r2 - r), so2_distance(a2, a))
    beta, d = _line_normal_form(V)
    # the snapped copy's offset recomputed from the placement
    offset = x[:, 0] * np.cos(a2 + beta) + x[:, 1] * np.sin(a2 + beta) + r2 * d
    j = np.remainder(np.rint(g2 / fam.angle_step).astype(np.int64), fam._n_angles)
    member = fam.offset_error(j, offset)
    in_I = (r2 >= I[0] - tol) & (r2 <= I[1] + tol)
    ok = (move <= fam.eps) & (member <= tol) & in_I
    bad = np.flatnonzero(~ok)
    counter = None
    if bad.size:
        i = int(bad[0])
        counter = {"x": x[i].tolist(), "r": float(r[i]), "theta": float(a[i])}
    return {
        "samples": int(samples),
        "seed": int(seed),
        "passed": bool(ok.all()),
        "max_move": float(move.max()) if samples else 0.0,
        "max_line_error": float(member.max()) if samples else 0.0,
        "counterexample": counter,
        "family_size": len(fam),
    }


def cover_placements(fam: CoverFamily, V: AffineSubspace, L: PlacementSet, I) -> PlacementSet:
    """Replace every placement of ``L`` by its snapped copy onto the family."""
    if L.tag != "scaled_rotated" or L.n != 2:
        raise TagMismatch("cover placements need planar scaled-and-rotated placements")
    r2, a2, _, _ = snap_to_cover(fam, V, L.centers, L.scales, L.rotations, I)
    return PlacementSet(L.centers.copy(), r2, a2, "scaled_rotated")


# ---------------------------------------------------------------- tangent planes
def default_host_family(n: int, k: int, box=None, count: int = 64) -> list[AffineSubspace]:
    """``count`` affine ``(k+1)``-planes spread over ``box`` by a Halton sequence."""
    dim = k + 1
    if not (n in (2, 3) and 0 <= k < n):
        raise GeometryError(f"unsupported (n, k) = ({n}, {k})")
    box = np.array(box if box is not None else [(0.0, 1.0)] * n, dtype=float)
    if dim == n:
        raise GeometryError("a host of full dimension is the whole space; use k < n - 1")
    centre = box.mean(axis=1)
    radius = 0.5 * float(np.linalg.norm(box[:, 1] - box[:, 0]))
    d_par = {(2, 1): 2, (3, 2): 3, (3, 1): 4}[(n, dim)]
    u = qmc.Halton(d_par, scramble=False).random(count + 1)[1:]
    out = []
    for row in u:
        if n == 2:
            a = math.pi * row[0]
            w = np.array([math.cos(a), math.sin(a)])
            off = (2 * row[1] - 1) * radius + centre @ w
            out.append(AffineSubspace.through(off * w, [[-w[1], w[0]]]))
        elif dim == 2:
            w = _sphere_point(row[0], row[1])
            off = (2 * row[2] - 1) * radius + centre @ w
            e1, e2 = _complement(w)
            out.append(AffineSubspace.through(off * w, [e1, e2]))
        else:
            t = _sphere_point(row[0], row[1])
            e1, e2 = _complement(t)
            p = centre + (2 * row[2] - 1) * radius * e1 + (2 * row[3] - 1) * radius * e2
            out.append(AffineSubspace.through(p, [t]))
    return out


def _sphere_point(s, t) -> np.ndarray:
    z = 2 * s - 1
    phi = 2 * math.pi * t
    rho = math.sqrt(max(0.0, 1 - z * z))
    return np.array([rho * math.cos(phi), rho * math.sin(phi), z])


def _complement(w) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the plane orthogonal to a unit vector in space."""
    a = np.eye(3)[int(np.argmin(np.abs(w)))]
    e1 = np.cross(w, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(w, e1)
    return e1, e2


@dataclass
class TangentPlane:
    plane: AffineSubspace
    host: int
    center: np.ndarray
    radius: float
    distance: float


def tangent_plane(W: AffineSubspace, x, r: float, tol: float = 1e-12, index: int = 0) -> TangentPlane:
    """A ``(dim W - 1)``-plane of ``W`` tangent to the sphere ``W cap S(x, r)``.

    With ``c`` the foot of ``x`` on ``W`` and ``e`` the first direction of
    ``W``, the plane through ``c + rho e`` spanned by the other directions of
    ``W`` is at distance ``sqrt(|x - c|^2 + rho^2) = r`` from ``x``.
    """
    x = np.asarray(x, dtype=float)
    c = W.project(x)
    h = float(np.linalg.norm(x - c))
    if not h < r - tol:
        raise NoIntersectingHost(f"host {index} misses the open ball")
    rho = math.sqrt((r - h) * (r + h))
    e = W.basis[0]
    q = c + rho * e
    plane = AffineSubspace.through(q, W.basis[1:])
    return TangentPlane(plane, index, c, rho, float(np.linalg.norm(x - plane.project(x))))


def tangent_family(placements, k: int, n: int, W_family=None, tol: float = 1e-12):
    """For each ``(x, r)``, a ``k``-plane at distance ``r`` from ``x`` inside some host.

    The host is the first member of ``W_family`` whose distance to ``x`` is
    below ``r - tol``.  Returns a list of ``(plane, host_index)`` pairs.
    """
    if not (n in (2, 3) and 0 <= k < n):
        raise GeometryError(f"unsupported (n, k) = ({n}, {k})")
    if W_family is None:
        W_family = default_host_family(n, k)
    for W in W_family:
        if W.n != n or W.k != k + 1:
            raise GeometryError("hosts must be (k+1)-planes in the ambient space")
    anchors = np.array([W.anchor for W in W_family])
    out = []
    for x, r in placements:
        x = np.asarray(x, dtype=float)
        if x.size != n:
            raise GeometryError("placement centre has the wrong dimension")
        dist = np.array([float(W.distance(x)) for W in W_family]) if len(anchors) else np.empty(0)
        hit = np.flatnonzero(dist < r - tol)
        if hit.size == 0:
            raise NoIntersectingHost(f"no host meets the open ball B({x.tolist()}, {r})")
        i = int(hit[0])
        tp = tangent_plane(W_family[i], x, r, tol, i)
        out.append((tp.plane, i))
    return out


# ---------------------------------------------------------------- frames
@dataclass(frozen=True)
class Isometry:
    """``g(p) = M p + t`` with ``M`` orthogonal."""

    M: np.ndarray
    t: np.ndarray

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(np.eye(2), np.zeros(2))

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.M, np.eye(2)) and not np.any(self.t))

    @property
    def orientation(self) -> int:
        return int(round(np.linalg.det(self.M)))

    def __call__(self, p) -> np.ndarray:
        return np.asarray(p, dtype=float) @ self.M.T + self.t

    def linear(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float) @ self.M.T

    def inverse(self) -> "Isometry":
        Mi = self.M.T
        return Isometry(Mi, -Mi @ self.t)

    def then(self, other: "Isometry") -> "Isometry":
        """``other after self``."""
        return Isometry(other.M @ self.M, other.M @ self.t + other.t)

    def to_dict(self) -> dict:
        return {"matrix": self.M.tolist(), "translation": self.t.tolist()}


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass
class NormalizedFrame:
    g: Isometry
    x0: np.ndarray
    r0: float
    puncture: np.ndarray
    disk: Disk
    reflected: bool

    @property
    def inverse(self) -> Isometry:
        return self.g.inverse()


def normalize_frame(x0, r0: float, theta0: float, B: Disk) -> NormalizedFrame:
    """Rigid motion putting a hyperplane placement and a ball in standard position.

    Afterwards the rotation is the identity, the point ``x0 + r0 e_1`` lies on
    the positive ``y_2``-axis, the ball misses the closed upper half of that
    axis and lies in ``{y_2 >= -2 diam B}``.  If the ball crosses the axis
    above the point, the motion includes the reflection ``y_2 -> -y_2``,
    which fixes ``e_1`` and the hyperplane direction.
    """
    x0 = np.asarray(x0, dtype=float)
    if r0 < 0:
        raise GeometryError("r0 must be nonnegative")
    R0 = _rot(theta0)
    p = x0 + r0 * R0[:, 0]
    c = np.asarray(B.center, dtype=float)
    if np.linalg.norm(p - c) <= B.radius:
        raise PunctureInsideBall("the point x0 + r0 T0(e1) lies in the ball")
    # undo the rotation, then move the point onto the vertical axis
    g = Isometry(R0.T, np.zeros(2))
    pp, cc = g(p), g(c)
    g = g.then(Isometry(np.eye(2), np.array([-pp[0], 0.0])))
    pp, cc = g(p), g(c)
    rad = B.radius
    reflected = False
    if abs(cc[0]) <= rad:
        half = math.sqrt(max(0.0, rad * rad - cc[0] * cc[0]))
        if cc[1] - half > pp[1]:
            # the ball sits on the axis above the point: flip heights about the point
            g = g.then(Isometry(np.diag([1.0, -1.0]), np.array([0.0, 2 * pp[1]])))
            pp, cc = g(p), g(c)
            reflected = True
        top = cc[1] + half
    else:
        top = -math.inf
    lowest_allowed = cc[1] - rad + 2 * (2 * rad)
    if top < 0 < pp[1] and lowest_allowed >= 0:
        y0 = 0.0
    elif math.isfinite(top):
        y0 = min(0.5 * (top + pp[1]), lowest_allowed)
    else:
        y0 = min(pp[1] - rad, lowest_allowed)
    if y0 != 0.0:
        g = g.then(Isometry(np.eye(2), np.array([0.0, -y0])))
    return NormalizedFrame(g, g(x0), r0, g(p), Disk(tuple(g(c).tolist()), rad), reflected)


# ---------------------------------------------------------------- Nikodym patch
@dataclass
class PatchNeighborhood:
    """``U``: points ``y`` of the dual sector with ``d(y, l_1) < r0 - rho`` and
    ``r0 + rho < d(y, l_2)``, times scales in ``(r0 - rho, r0 + rho)``.

    Coordinates are in the normalized frame; ``box_half_width`` describes a
    square around ``x0`` inside the spatial part.
    """

    phi: float
    rho: float
    x0: np.ndarray
    r0: float
    box_half_width: float

    def contains(self, x, r) -> bool:
        x = np.asarray(x, dtype=float)
        D = DoubleCone(Point2(0.0, 0.0), -self.phi, self.phi)
        ux1, uy1 = math.sin(D.phi1), math.cos(D.phi1)
        ux2, uy2 = math.sin(D.phi2), math.cos(D.phi2)
        if x[0] * ux1 + x[1] * uy1 <= 0 or x[0] * ux2 + x[1] * uy2 <= 0:
            return False
        d1 = -x[0] * math.cos(-self.phi) + x[1] * math.sin(-self.phi)
        d2 = -x[0] * math.cos(self.phi) + x[1] * math.sin(self.phi)
        return d1 < self.r0 - self.rho and self.r0 + self.rho < d2 and abs(r - self.r0) < self.rho and r >= 0

    def grid(self, n: int = 20):
        """An ``n x n`` grid of ``(x, r)``: ``n`` centres in the box times ``n`` scales."""
        cols = math.ceil(math.sqrt(n))
        rows = math.ceil(n / cols)
        w = self.box_half_width
        gx = np.linspace(-w, w, cols)
        gy = np.linspace(-w, w, rows)
        xs = np.array([(self.x0[0] + a, self.x0[1] + b) for b in gy for a in gx])[:n]
        r_lo = max(0.0, self.r0 - self.rho)
        r_hi = self.r0 + self.rho
        rs = r_lo + (r_hi - r_lo) * (np.arange(n) + 0.5) / n
        X = np.repeat(xs, n, axis=0)
        Rr = np.tile(rs, n)
        return X, Rr

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "rho": self.rho,
            "x0": self.x0.tolist(),
            "r0": self.r0,
            "box_half_width": self.box_half_width,
        }


@dataclass
class NikodymPatch:
    frame: NormalizedFrame
    neighborhood: PatchNeighborhood
    forest: ConeForest
    eta: float
    eps: float
    disk_area: object
    lift_dimension: int = 2
    witnesses: dict = field(default_factory=dict)

    @property
    def lift_factor(self) -> float:
        """Area bound after multiplying the planar patch by the remaining coordinates."""
        return self.eps * self.frame.disk.diameter ** (self.lift_dimension - 2)

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "eps": self.eps,
            "frame": self.frame.g.to_dict(),
            "reflected": self.frame.reflected,
            "neighborhood": self.neighborhood.to_dict(),
            "forest_params": self.forest.to_dict()["params"],
            "final_cones": int(self.forest.final[0].shape[0]),
            "disk_area": {
                "estimate": self.disk_area.estimate,
                "stderr": self.disk_area.stderr,
                "strip_bound": self.disk_area.strip_bound,
                "disjoint": self.disk_area.disjoint,
                "upper": self.disk_area.upper,
            },
            "lift_dimension": self.lift_dimension,
            "lift_factor": self.lift_factor,
            "witnesses": self.witnesses,
        }


def _separating_aperture(disk: Disk, cap: float) -> float:
    """Largest ``phi <= cap`` (up to bisection accuracy) with the upper nappe of
    ``D(-phi, phi)`` at the origin missing the disk."""
    cx, cy = disk.center

    def clear(phi):
        return float(sector_distance(cx, cy, 0.0, 0.0, -phi, phi)) > disk.radius

    if clear(cap):
        return cap
    if not clear(0.0):
        raise InfeasibleAperture("the disk meets the upper axis")
    lo, hi = 0.0, cap
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if clear(mid) else (lo, mid)
    return lo


def nikodym_patch(
    x0,
    r0: float,
    theta0: float,
    B: Disk,
    eta: float,
    eps: float,
    n_samples: int = 1_000_000,
    seed: int = 0,
    cone_cap: int = DEFAULT_CONE_CAP,
    max_generations: int = 18,
    grid: int = 20,
    dimension: int = 2,
    tol: float = 1e-9,
) -> NikodymPatch:
    """Cone forest with a line at every distance in ``U`` and small area in ``B``.

    In the normalized frame, ``D = D(-phi, phi)`` at the origin with ``phi``
    half the largest aperture that keeps ``x0`` inside the dual sector and the
    upper nappe away from ``B``, capped by ``eta``.  The number of generations
    doubles from one until the measured area of ``B`` in the translated
    forest drops below ``eps``; the forest's neighbourhood tolerance is half
    the gap between ``B`` and the upper nappe, so no translated cone reaches
    ``B`` above the vertex level.
    """
    if not (eta > 0 and eps > 0):
        raise GeometryError("eta and eps must be positive")
    frame = normalize_frame(x0, r0, theta0, B)
    xn = frame.x0
    disk = frame.disk
    s = xn[1]
    dual_cap = math.atan2(s, r0) if r0 > 0 else HALF_PI
    gap = _separating_aperture(disk, min(eta, dual_cap, HALF_PI - 1e-3))
    phi = 0.5 * min(eta, dual_cap, gap)
    if not phi > 0:
        raise InfeasibleAperture("no aperture separates the disk from the upper cone")
    D = DoubleCone(Point2(0.0, 0.0), -phi, phi)
    n1 = (-math.cos(-phi), math.sin(-phi))
    n2 = (-math.cos(phi), math.sin(phi))
    d1 = xn[0] * n1[0] + xn[1] * n1[1]
    d2 = xn[0] * n2[0] + xn[1] * n2[1]
    rho = 0.5 * min(r0 - d1, d2 - r0)
    dual_margin = min(
        xn[0] * math.sin(-phi) + xn[1] * math.cos(-phi), xn[0] * math.sin(phi) + xn[1] * math.cos(phi)
    )
    w = 0.45 * min(rho, dual_margin) / math.sqrt(2.0)
    U = PatchNeighborhood(phi, rho, xn, r0, w)
    clearance = float(sector_distance(disk.center[0], disk.center[1], 0.0, 0.0, -phi, phi)) - disk.radius
    R = 2.0 * disk.diameter
    policy = FinenessPolicy()
    N = 1
    while True:
        forest = iterate(D, R, N, 0.5 * clearance, policy, cone_cap)
        area = disk_intersection_area(forest, disk, n_samples, seed)
        if area.upper < eps:
            break
        if 2 * N > max_generations:
            raise ConeBudgetExceeded(f"disk area {area.upper} still above {eps} after {N} generations")
        N *= 2
    patch = NikodymPatch(frame, U, forest, eta, eps, area, dimension)
    X, Rr = U.grid(grid)
    patch.witnesses = check_patch_witnesses(patch, X, Rr, tol)
    return patch


def check_patch_witnesses(patch: NikodymPatch, X, Rr, tol: float = 1e-9) -> dict:
    """Witness lines for ``(x, r)`` pairs of ``U`` (normalized frame), with their
    angle to the vertical and the distance recomputed in the original frame."""
    _, theta, offset, ok = witness_lines(patch.forest, X, Rr, tol)
    # pull each witness back to the original frame and recompute its distance
    ginv = patch.frame.inverse
    nx, ny = -np.cos(theta), np.sin(theta)
    foot = np.column_stack([offset * nx, offset * ny])
    u = np.column_stack([np.sin(theta), np.cos(theta)])
    foot_o = ginv(foot)
    u_o = ginv.linear(u)
    x_o = ginv(X)
    rel = x_o - foot_o
    cross = rel[:, 0] * u_o[:, 1] - rel[:, 1] * u_o[:, 0]
    # a reflection swaps sides, and the signed distance follows the pulled-back direction
    signed = -cross if patch.frame.g.orientation > 0 else cross
    err = np.abs(signed - Rr)
    dev = np.abs(theta)
    ok = ok & (err <= tol) & (dev <= patch.eta)
    return {
        "count": int(X.shape[0]),
        "passed": int(ok.sum()),
        "max_distance_error": float(err.max()),
        "max_angle_deviation": float(dev.max()),
        "all_ok": bool(ok.all()),
    }
