"""Translated cone forests: partition a double cone, push the pieces down, repeat.

One basic step cuts a cone into ``m`` equal-angle sub-cones and translates each
sub-cone by a vector ``v`` with ``v_2 = -delta`` chosen so that ``-v`` lies in
the sub-cone and in its dual sector.  The second requirement makes every point
of the parent's dual sector a point of the child's dual sector, and the first
makes the child's family of distances from such a point contain the family of
its untranslated version.  Iterating the step ``N`` times with
``delta = R / N`` gives a forest whose last generation has small area in the
strip ``{-R <= y_2 <= 0}`` (measured relative to the original vertex) while
still realising every signed distance the original cone realises.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConeBudgetExceeded, GeometryError, PointNotInDualCone, WitnessNotFound
from .planar import (
    HALF_PI,
    TOL,
    DirectedLine,
    DoubleCone,
    Point2,
    distance_interval,
    dual_contains,
    sector_distance,
    signed_distance,
    solve_angles,
)

DEFAULT_CONE_CAP = 1_000_000


@dataclass(frozen=True)
class ConePartition:
    parent: DoubleCone
    cuts: tuple

    @property
    def cones(self) -> list[DoubleCone]:
        return [DoubleCone(self.parent.vertex, lo, hi) for lo, hi in zip(self.cuts[:-1], self.cuts[1:])]

    def __len__(self):
        return len(self.cuts) - 1


@dataclass(frozen=True)
class TranslatedCone:
    cone: DoubleCone
    generation: int
    parent: int
    translation: Point2
    id: int = -1


@dataclass(frozen=True)
class FinenessPolicy:
    """How finely each generation is partitioned.

    ``m`` sub-cones per cone to start with.  With ``adaptive`` set, a generation
    whose measured sub-strip areas reach the bound ``c' delta^2``, or whose
    excursion outside ``D ∩ {y_2 >= 0}`` exceeds its share ``eps * k / N`` of
    the neighbourhood budget, is rebuilt with twice as many sub-cones per cone.
    """

    m: int = 2
    adaptive: bool = True
    max_m: int = 1 << 12
    check_measure: bool = True
    check_neighborhood: bool = True

    def __post_init__(self):
        if self.m < 1:
            raise GeometryError("partition fineness m must be at least 1")


def partition_cone(D: DoubleCone, m: int) -> ConePartition:
    if m < 1:
        raise GeometryError(f"cannot partition a cone into {m} pieces")
    width = D.phi2 - D.phi1
    cuts = [D.phi1 + width * j / m for j in range(m)] + [D.phi2]
    return ConePartition(D, tuple(cuts))


def _admissible_angles(phi1, phi2):
    """Angles of ``-v`` allowed by both ``-v in D_i`` and ``-v in D_i^perp``."""
    return np.maximum(phi1, phi2 - HALF_PI), np.minimum(phi2, phi1 + HALF_PI)


def admissible_vertex_segment(D_i: DoubleCone, delta: float) -> tuple[Point2, Point2]:
    """Segment of admissible translated vertices on the line ``delta`` below the vertex."""
    if not delta > 0:
        raise GeometryError("delta must be positive")
    lo, hi = _admissible_angles(D_i.phi1, D_i.phi2)
    if lo > hi:
        raise GeometryError(f"empty admissible segment for {D_i}")
    vx, vy = D_i.vertex
    y = vy - delta
    return Point2(vx - delta * math.tan(hi), y), Point2(vx - delta * math.tan(lo), y)


def _split_generation(V, P, m, delta):
    """Children of every cone in (V, P): equal-angle cuts, midpoint admissible vertices."""
    n = V.shape[0]
    frac = np.arange(m + 1) / m
    width = (P[:, 1] - P[:, 0])[:, None]
    cuts = P[:, :1] + width * frac[None, :]
    cuts[:, -1] = P[:, 1]
    a1 = cuts[:, :-1].ravel()
    a2 = cuts[:, 1:].ravel()
    lo, hi = _admissible_angles(a1, a2)
    shift = -0.5 * delta * (np.tan(lo) + np.tan(hi))
    parent = np.repeat(np.arange(n), m)
    Vc = np.empty((n * m, 2))
    Vc[:, 0] = V[parent, 0] + shift
    Vc[:, 1] = V[parent, 1] - delta
    return Vc, np.stack([a1, a2], axis=1), parent


@dataclass
class ConeForest:
    """Generational cone forest.

    Generation 0 is the original cone; generation ``k`` holds ``E_k``.  The
    children of cone ``p`` of generation ``k - 1`` are the contiguous block
    ``p * branching[k-1] ... (p + 1) * branching[k-1] - 1`` of generation ``k``,
    in increasing angle order.
    """

    original: DoubleCone
    R: float
    N: int
    eps: float
    vertices: list = field(default_factory=list)
    angles: list = field(default_factory=list)
    parents: list = field(default_factory=list)
    branching: list = field(default_factory=list)
    cone_cap: int = DEFAULT_CONE_CAP
    log: list = field(default_factory=list)

    @classmethod
    def trivial(cls, D: DoubleCone, R: float = 1.0, eps: float = math.inf) -> "ConeForest":
        forest = cls(D, R, 0, eps)
        forest.vertices = [np.array([[D.vertex[0], D.vertex[1]]])]
        forest.angles = [np.array([[D.phi1, D.phi2]])]
        forest.parents = [np.array([-1])]
        return forest

    @property
    def delta(self) -> float:
        return self.R / self.N if self.N else 0.0

    @property
    def top(self) -> float:
        return self.original.vertex[1]

    @property
    def c(self) -> float:
        """Area of the original cone between its vertex level and one unit above."""
        return self.original.unit_height_area

    @property
    def c_prime(self) -> float:
        return 2.0 * self.c

    @property
    def n_cones(self) -> int:
        return sum(v.shape[0] for v in self.vertices)

    def generation(self, k: int):
        """(vertices, angles) arrays of generation ``k``."""
        return self.vertices[k], self.angles[k]

    @property
    def final(self):
        return self.generation(len(self.vertices) - 1)

    def _offsets(self):
        return np.concatenate([[0], np.cumsum([v.shape[0] for v in self.vertices])])

    @property
    def snapshots(self) -> list[range]:
        """Global cone ids of ``E_1, ..., E_N``."""
        off = self._offsets()
        return [range(int(off[k]), int(off[k + 1])) for k in range(1, len(self.vertices))]

    def cone(self, gid: int) -> TranslatedCone:
        off = self._offsets()
        k = int(np.searchsorted(off, gid, side="right") - 1)
        if not 0 <= gid < off[-1]:
            raise IndexError(gid)
        i = gid - int(off[k])
        V, P = self.vertices[k], self.angles[k]
        cone = DoubleCone(Point2(*V[i]), float(P[i, 0]), float(P[i, 1]))
        if k == 0:
            return TranslatedCone(cone, 0, -1, Point2(0.0, 0.0), gid)
        p = int(self.parents[k][i])
        pv = self.vertices[k - 1][p]
        return TranslatedCone(
            cone, k, int(off[k - 1]) + p, Point2(V[i, 0] - pv[0], V[i, 1] - pv[1]), gid
        )

    @property
    def cones(self) -> list[TranslatedCone]:
        return [self.cone(g) for g in range(int(self._offsets()[-1]))]

    def final_cones(self) -> list[DoubleCone]:
        V, P = self.final
        return [DoubleCone(Point2(*v), float(p[0]), float(p[1])) for v, p in zip(V, P)]

    # --------------------------------------------------------- serialisation
    def to_dict(self) -> dict:
        cones = []
        gid = 0
        for k, (V, P) in enumerate(zip(self.vertices, self.angles)):
            off_prev = int(self._offsets()[k - 1]) if k > 0 else 0
            for i in range(V.shape[0]):
                cones.append(
                    {
                        "id": gid,
                        "generation": k,
                        "parent": int(self.parents[k][i]) + off_prev if k > 0 else -1,
                        "vertex": [float(V[i, 0]), float(V[i, 1])],
                        "phi1": float(P[i, 0]),
                        "phi2": float(P[i, 1]),
                    }
                )
                gid += 1
        return {
            "params": {
                "phi1": self.original.phi1,
                "phi2": self.original.phi2,
                "vertex": [self.original.vertex[0], self.original.vertex[1]],
                "R": self.R,
                "N": self.N,
                "delta": self.delta,
                "eps": self.eps if math.isfinite(self.eps) else None,
                "branching": list(self.branching),
                "cone_cap": self.cone_cap,
            },
            "cones": cones,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ConeForest":
        p = doc["params"]
        D = DoubleCone(Point2(*p["vertex"]), p["phi1"], p["phi2"])
        eps = math.inf if p.get("eps") is None else p["eps"]
        forest = cls(D, p["R"], p["N"], eps, cone_cap=p.get("cone_cap", DEFAULT_CONE_CAP))
        forest.branching = list(p.get("branching", []))
        gens: dict[int, list] = {}
        for item in doc["cones"]:
            gens.setdefault(item["generation"], []).append(item)
        offset = 0
        prev_offset = 0
        for k in sorted(gens):
            items = gens[k]
            forest.vertices.append(np.array([it["vertex"] for it in items], dtype=float))
            forest.angles.append(np.array([[it["phi1"], it["phi2"]] for it in items], dtype=float))
            if k == 0:
                forest.parents.append(np.array([-1] * len(items)))
            else:
                forest.parents.append(np.array([it["parent"] - prev_offset for it in items]))
            prev_offset = offset
            offset += len(items)
        return forest


# ---------------------------------------------------------------- checks
def _substrip_areas(forest: ConeForest, k: int) -> np.ndarray:
    """Areas of ``E_k`` in the sub-strips ``j = 1..k`` (index ``j - 1``)."""
    from .measure import cone_array_profile

    V, P = forest.generation(k)
    d = forest.delta
    top = forest.top
    cuts = [top - j * d for j in range(k, -1, -1)]
    areas = cone_array_profile(V, P, cuts)
    return areas[::-1].copy()


def _neighborhood_sup(forest: ConeForest, V, P) -> float:
    """Exact sup over the cones' parts above the vertex level of the distance to D ∩ {y >= top}.

    For a cone with vertex below the level, its part above the level is its
    cross-section on the level plus the upper nappe, and adding a vector of
    a convex cone never increases the distance to that cone; the distance
    being convex, the sup is attained at an end of the cross-section.
    """
    D = forest.original
    h = forest.top - V[:, 1]
    above = h < 0
    hh = np.maximum(h, 0.0)
    xl = V[:, 0] + hh * np.tan(P[:, 0])
    xr = V[:, 0] + hh * np.tan(P[:, 1])
    xs = np.concatenate([xl, xr])
    ys = np.full(xs.shape, forest.top)
    dist = sector_distance(xs, ys, D.vertex[0], D.vertex[1], D.phi1, D.phi2)
    sup = float(dist.max()) if dist.size else 0.0
    if above.any():
        # a vertex above the level: the whole cone cannot be bounded
        sup = math.inf
    return sup


def iterate(
    D: DoubleCone,
    R: float,
    N: int,
    eps: float = math.inf,
    policy: FinenessPolicy | None = None,
    cone_cap: int = DEFAULT_CONE_CAP,
    tol: float = TOL,
) -> ConeForest:
    """Apply the basic step ``N`` times with ``delta = R / N``."""
    if not (R > 0 and math.isfinite(R)):
        raise GeometryError("R must be positive and finite")
    if N < 1:
        raise GeometryError("N must be at least 1")
    if not eps > 0:
        raise GeometryError("eps must be positive")
    policy = policy or FinenessPolicy()
    forest = ConeForest.trivial(D, R, eps)
    forest.N = N
    forest.cone_cap = cone_cap
    delta = R / N
    total = 1
    bound = forest.c_prime * delta * delta
    for k in range(1, N + 1):
        m = policy.m
        while True:
            V, P, parent = _split_generation(forest.vertices[-1], forest.angles[-1], m, delta)
            if total + V.shape[0] > cone_cap:
                raise ConeBudgetExceeded(
                    f"generation {k} needs {V.shape[0]} cones at m={m}; cap is {cone_cap}"
                )
            forest.vertices.append(V)
            forest.angles.append(P)
            forest.parents.append(parent)
            entry = {"generation": k, "m": m, "cones": int(V.shape[0])}
            ok = True
            if policy.adaptive and policy.check_measure:
                areas = _substrip_areas(forest, k)
                entry["max_substrip_ratio"] = float(areas.max() / bound)
                ok &= bool(np.all(areas < bound + tol))
            if policy.adaptive and policy.check_neighborhood and math.isfinite(eps):
                sup = _neighborhood_sup(forest, V, P)
                entry["neighborhood_sup"] = sup
                ok &= sup <= eps * k / N
            forest.log.append(entry)
            if ok or not policy.adaptive:
                break
            forest.vertices.pop()
            forest.angles.pop()
            forest.parents.pop()
            if 2 * m > policy.max_m:
                raise ConeBudgetExceeded(f"generation {k} still fails at m={m}")
            m *= 2
        forest.branching.append(m)
        total += V.shape[0]
    return forest


def basic_step(
    D: DoubleCone,
    delta: float,
    eps: float = math.inf,
    policy: FinenessPolicy | None = None,
    cone_cap: int = DEFAULT_CONE_CAP,
) -> ConeForest:
    """One generation: partition ``D`` and translate each piece ``delta`` downwards."""
    if not delta > 0:
        raise GeometryError("delta must be positive")
    return iterate(D, delta, 1, eps, policy, cone_cap)


# ---------------------------------------------------------------- witnesses
def _intervals(V, P, px, py):
    """Signed distances from points to the two boundary lines of matching cones."""
    out = []
    for col in (0, 1):
        th = P[..., col]
        nx, ny = -np.cos(th), np.sin(th)
        out.append((px - V[..., 0]) * nx + (py - V[..., 1]) * ny)
    return out[0], out[1]


def witness_lines(forest: ConeForest, xs, rs, tol: float = TOL):
    """Vectorised witness search.

    Returns ``(cone_index, theta, offset, ok)`` arrays: for each query point
    and target distance, a line through the vertex of a final-generation cone,
    inside that cone, at signed distance ``r`` from the point.  Queries
    descend the forest, choosing at every generation the child whose distance
    interval contains the target; children whose intervals tile the parent's
    are guaranteed to exist by the dual containment of the construction.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    rs = np.atleast_1d(np.asarray(rs, dtype=float))
    px, py = xs[:, 0], xs[:, 1]
    S = rs.size
    cur = np.zeros(S, dtype=np.int64)
    ok = np.ones(S, dtype=bool)
    for k in range(1, len(forest.vertices)):
        m = forest.branching[k - 1]
        V, P = forest.generation(k)
        idx = cur[:, None] * m + np.arange(m)[None, :]
        lo, hi = _intervals(V[idx], P[idx], px[:, None], py[:, None])
        margin = np.minimum(rs[:, None] - lo, hi - rs[:, None])
        pick = np.argmax(margin, axis=1)
        ok &= margin[np.arange(S), pick] >= -tol
        cur = idx[np.arange(S), pick]
    V, P = forest.final
    v, p = V[cur], P[cur]
    qx, qy = px - v[:, 0], py - v[:, 1]
    theta = np.clip(solve_angles(qx, qy, rs), p[:, 0], p[:, 1])
    lo, hi = _intervals(v, p, px, py)
    theta = np.where(rs <= lo, p[:, 0], np.where(rs >= hi, p[:, 1], theta))
    nx, ny = -np.cos(theta), np.sin(theta)
    offset = v[:, 0] * nx + v[:, 1] * ny
    dist = px * nx + py * ny - offset
    ok &= np.abs(dist - rs) <= tol
    return cur, theta, offset, ok


def _brute_witness(forest: ConeForest, x, r, tol):
    V, P = forest.final
    lo, hi = _intervals(V, P, x[0], x[1])
    dual = np.ones(V.shape[0], dtype=bool)
    for col in (0, 1):
        th = P[:, col]
        dual &= (x[0] - V[:, 0]) * np.sin(th) + (x[1] - V[:, 1]) * np.cos(th) >= -tol
    cand = np.flatnonzero(dual & (lo - tol <= r) & (r <= hi + tol))
    for i in cand:
        cone = DoubleCone(Point2(*V[i]), float(P[i, 0]), float(P[i, 1]))
        try:
            from .planar import line_at_distance

            ell = line_at_distance(cone, x, min(max(r, lo[i]), hi[i]), tol)
        except GeometryError:
            continue
        if abs(signed_distance(x, ell) - r) <= tol:
            return int(i), ell
    return None


def witness_line(forest: ConeForest, x, r: float, tol: float = TOL) -> DirectedLine:
    """A line inside some final-generation cone at signed distance ``r`` from ``x``."""
    D = forest.original
    if not dual_contains(D, x, tol):
        raise WitnessNotFound(f"{tuple(x)} is not in the dual sector of the original cone")
    try:
        lo, hi = distance_interval(D, x, tol)
    except PointNotInDualCone as exc:
        raise WitnessNotFound(str(exc)) from exc
    if not (lo - tol <= r <= hi + tol):
        raise WitnessNotFound(f"distance {r} outside the original interval [{lo}, {hi}]")
    _, theta, offset, ok = witness_lines(forest, [x], [r], tol)
    if ok[0]:
        return DirectedLine(float(theta[0]), float(offset[0]))
    found = _brute_witness(forest, x, r, tol)
    if found is None:
        raise WitnessNotFound(f"no forest cone realises distance {r} from {tuple(x)}")
    return found[1]


# ---------------------------------------------------------------- reports
@dataclass
class ConditionReport:
    """Outcome of checking the construction's conditions on a forest."""

    strip_area: float
    strip_bound: float
    first_strip_area: float
    first_strip_bound: float
    substrip_areas: list
    substrip_bound: float
    substrip_max_ratio: float
    surjectivity_samples: int
    surjectivity_pass_rate: float
    surjectivity_max_error: float
    surjectivity_counterexample: list | None
    dual_containment_pass: bool
    vertex_level_max_deviation: float
    neighborhood_eps: float | None
    neighborhood_sampled_max: float
    neighborhood_sup: float
    drift_bound: float
    tol: float
    flags: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_dict(self) -> dict:
        out = {}
        for key in self.__dataclass_fields__:
            val = getattr(self, key)
            if isinstance(val, float) and not math.isfinite(val):
                val = None
            out[key] = val
        out["passed"] = self.passed
        return out


def _sample_dual(D: DoubleCone, n: int, rng, radius: float):
    lo, hi = D.phi2 - HALF_PI, D.phi1 + HALF_PI
    ang = rng.uniform(lo, hi, n)
    rad = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
    return np.stack([D.vertex[0] + rad * np.sin(ang), D.vertex[1] + rad * np.cos(ang)], axis=1)


def verify_conditions(
    forest: ConeForest,
    samples: int = 1000,
    seed: int = 0,
    tol: float = TOL,
    eps: float | None = None,
    ray_points: int = 16,
) -> ConditionReport:
    """Check the strip-measure, surjectivity, level, dual and neighbourhood conditions."""
    D = forest.original
    N = len(forest.vertices) - 1
    eps = forest.eps if eps is None else eps
    rng = np.random.default_rng(seed)

    # measure conditions
    if N == 0:
        sub, first, strip = [], 0.0, 0.0
        bound = first_bound = strip_bound = 0.0
        max_ratio = 0.0
    else:
        bound = forest.c_prime * forest.delta ** 2
        sub = [_substrip_areas(forest, k).tolist() for k in range(1, N + 1)]
        strip = float(np.sum(sub[-1]))
        strip_bound = forest.c_prime * forest.R ** 2 / N
        first = float(sub[0][0])
        first_bound = forest.c * forest.delta ** 2
        max_ratio = max(max(row) for row in sub) / bound

    # vertex levels
    dev = 0.0
    for k in range(1, N + 1):
        V = forest.vertices[k]
        dev = max(dev, float(np.abs(V[:, 1] - (forest.top - k * forest.delta)).max()))

    # dual containment: the apex of D's dual sector lies in every cone's dual sector
    dual_ok = True
    for k in range(1, N + 1):
        V, P = forest.generation(k)
        for col in (0, 1):
            th = P[:, col]
            proj = (D.vertex[0] - V[:, 0]) * np.sin(th) + (D.vertex[1] - V[:, 1]) * np.cos(th)
            dual_ok &= bool(np.all(proj >= -tol))

    # distance surjectivity
    xs = _sample_dual(D, samples, rng, 3.0 * max(forest.R, 1.0))
    lo, hi = _intervals(
        np.array([[D.vertex[0], D.vertex[1]]]), np.array([[D.phi1, D.phi2]]), xs[:, 0], xs[:, 1]
    )
    ts = lo + (hi - lo) * rng.uniform(0.0, 1.0, samples)
    counter = None
    max_err = 0.0
    passes = 0
    if samples:
        _, theta, offset, ok = witness_lines(forest, xs, ts, tol)
        dist = xs[:, 0] * -np.cos(theta) + xs[:, 1] * np.sin(theta) - offset
        err = np.abs(dist - ts)
        for q in np.flatnonzero(~ok):
            found = _brute_witness(forest, xs[q], ts[q], tol)
            if found is not None:
                ok[q] = True
                err[q] = abs(signed_distance(xs[q], found[1]) - ts[q])
            elif counter is None:
                counter = [float(xs[q, 0]), float(xs[q, 1]), float(ts[q])]
        passes = int(ok.sum())
        max_err = float(err[ok].max()) if ok.any() else math.inf
    rate = passes / samples if samples else 1.0

    # neighbourhood: sampled boundary rays plus the exact sup and a drift bound
    V, P = forest.final
    sampled = 0.0
    sup = 0.0
    drift = 0.0
    if N > 0:
        heights = forest.top + 3.0 * forest.R * np.linspace(0.0, 1.0, ray_points)
        for col in (0, 1):
            h = heights[None, :] - V[:, 1:2]
            px = V[:, 0:1] + h * np.tan(P[:, col : col + 1])
            py = np.broadcast_to(heights[None, :], px.shape)
            dist = sector_distance(px.ravel(), py.ravel(), D.vertex[0], D.vertex[1], D.phi1, D.phi2)
            sampled = max(sampled, float(dist.max()))
        sup = _neighborhood_sup(forest, V, P)
        shift = np.zeros(V.shape[0])
        idx = np.arange(V.shape[0])
        for k in range(N, 0, -1):
            par = forest.parents[k][idx]
            Vk, Vp = forest.vertices[k][idx], forest.vertices[k - 1][par]
            shift += np.hypot(Vk[:, 0] - Vp[:, 0], Vk[:, 1] - Vp[:, 1]) - forest.delta
            idx = par
        drift = float(np.abs(shift).max())

    flags = {
        "strip_measure": N == 0 or strip <= strip_bound + tol,
        "first_strip_measure": N == 0 or first <= first_bound + tol,
        "substrip_measure": N == 0 or max_ratio * bound < bound + tol,
        "surjectivity": rate == 1.0,
        "vertex_level": dev <= tol,
        "dual_containment": dual_ok,
        "neighborhood": (not math.isfinite(eps)) or sup <= eps + tol,
    }
    return ConditionReport(
        strip_area=strip,
        strip_bound=strip_bound,
        first_strip_area=first,
        first_strip_bound=first_bound,
        substrip_areas=sub,
        substrip_bound=bound,
        substrip_max_ratio=max_ratio,
        surjectivity_samples=samples,
        surjectivity_pass_rate=rate,
        surjectivity_max_error=max_err,
        surjectivity_counterexample=counter,
        dual_containment_pass=dual_ok,
        vertex_level_max_deviation=dev,
        neighborhood_eps=eps if math.isfinite(eps) else None,
        neighborhood_sampled_max=sampled,
        neighborhood_sup=sup,
        drift_bound=drift,
        tol=tol,
        flags=flags,
    )
