import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from gmtwitness.cones import iterate
from gmtwitness.errors import GeometryError
from gmtwitness.measure import (
    BoxCountSeries,
    Disk,
    area_rows_csv,
    box_counts,
    box_dimension_estimate,
    cantor_segments,
    cones_membership,
    disk_intersection_area,
    dyadic_scales,
    forest_area_table,
    monte_carlo_area,
    strip_monte_carlo,
    strip_union_area,
)
from gmtwitness.planar import DoubleCone, Point2, Strip

from oracles import box_count_brute, strip_area

Q = math.pi / 4
D45 = DoubleCone(Point2(0.0, 0.0), -Q, Q)


@st.composite
def cone_lists(draw, max_size=6):
    n = draw(st.integers(1, max_size))
    cones = []
    for _ in range(n):
        a = draw(st.floats(-1.3, 1.2))
        w = draw(st.floats(0.02, 1.0))
        v = (draw(st.floats(-1, 1)), draw(st.floats(-1.5, 0.5)))
        cones.append(DoubleCone(Point2(*v), a, min(a + w, 1.3)))
    return cones


def as_pairs(cones):
    return [((c.vertex[0], c.vertex[1]), (c.phi1, c.phi2)) for c in cones]


# ---------------------------------------------------------------- exact areas
def test_single_cone_unit_strip():
    assert strip_union_area([D45], Strip(0.0, 1.0)) == pytest.approx(1.0, abs=1e-12)


def test_disjoint_cones_add():
    a = DoubleCone(Point2(-5.0, 0.0), -0.2, 0.3)
    b = DoubleCone(Point2(5.0, 0.0), -0.1, 0.4)
    s = Strip(-1.0, 1.0)
    assert strip_union_area([a, b], s) == pytest.approx(
        strip_union_area([a], s) + strip_union_area([b], s), abs=1e-12
    )


def test_duplicate_cone_is_idempotent():
    s = Strip(-0.5, 2.0)
    assert strip_union_area([D45, D45], s) == pytest.approx(strip_union_area([D45], s), abs=1e-12)


def test_empty_cone_list():
    assert strip_union_area([], Strip(0.0, 1.0)) == 0.0


@given(cone_lists(), st.floats(-2, 0), st.floats(0.05, 2))
def test_matches_bruteforce_oracle(cones, y0, h):
    got = strip_union_area(cones, Strip(y0, y0 + h))
    assert got == pytest.approx(strip_area(as_pairs(cones), y0, y0 + h), abs=1e-9)


@given(cone_lists(), st.floats(-2, 0), st.floats(0.05, 1), st.floats(0.05, 1))
def test_additive_over_abutting_strips(cones, a, h1, h2):
    b, c = a + h1, a + h1 + h2
    whole = strip_union_area(cones, Strip(a, c))
    parts = strip_union_area(cones, Strip(a, b)) + strip_union_area(cones, Strip(b, c))
    assert whole == pytest.approx(parts, abs=1e-9)


@given(cone_lists(), st.randoms(use_true_random=False))
def test_monotone_and_order_invariant(cones, rnd):
    s = Strip(-1.0, 0.5)
    full = strip_union_area(cones, s)
    assert strip_union_area(cones[:-1], s) <= full + 1e-9
    shuffled = list(cones)
    rnd.shuffle(shuffled)
    assert strip_union_area(shuffled, s) == pytest.approx(full, abs=1e-9)


def test_substrip_constant_is_twice_unit_strip_area():
    f = iterate(D45, 1.0, 3)
    assert f.c_prime == pytest.approx(2 * strip_union_area([D45], Strip(0.0, 1.0)), abs=1e-12)


def test_area_table_and_csv():
    f = iterate(DoubleCone(Point2(0, 0), -math.pi / 8, math.pi / 8), 1.0, 3)
    rows = forest_area_table(f)
    assert len(rows) == 1 + 2 + 3 + 1
    assert all(r.passed for r in rows)
    text = area_rows_csv(rows)
    assert text.splitlines()[0] == "generation,strip_lo,strip_hi,area,bound,pass"
    assert text.endswith("\r\n")


# ---------------------------------------------------------------- Monte Carlo
def test_unit_disk_area():
    est, se = monte_carlo_area(lambda p: (p ** 2).sum(1) <= 1.0, ((-1, -1), (1, 1)), 1_000_000, seed=11)
    assert abs(est - math.pi) <= 4 * se


def test_monte_carlo_deterministic_and_chunk_independent():
    pred = lambda p: p[:, 0] < p[:, 1] ** 2
    a = monte_carlo_area(pred, ((0, 0), (1, 1)), 200_000, seed=5)
    b = monte_carlo_area(pred, ((0, 0), (1, 1)), 200_000, seed=5)
    c = monte_carlo_area(pred, ((0, 0), (1, 1)), 200_000, seed=5, chunk=1 << 18)
    assert a == b == c


def test_monte_carlo_errors():
    with pytest.raises(GeometryError):
        monte_carlo_area(lambda p: p[:, 0] > 0, ((0, 0), (0, 1)), 10)
    with pytest.raises(GeometryError):
        monte_carlo_area(lambda p: p[:, 0] > 0, ((0, 0), (1, 1)), 0)


def test_forest_strip_monte_carlo_agrees():
    f = iterate(DoubleCone(Point2(0, 0), -0.3, 0.2), 1.0, 4)
    s = Strip(-1.0, 0.0)
    exact = strip_union_area(f, s)
    est, se = strip_monte_carlo(f, s, 400_000, seed=2)
    assert abs(est - exact) <= 4 * se


def test_membership_predicate():
    V = np.array([[0.0, 0.0]])
    P = np.array([[-Q, Q]])
    inside = cones_membership(V, P)
    assert inside(np.array([[0.0, 1.0], [-0.5, -1.0], [1.0, 0.0]])).tolist() == [True, True, False]


# ---------------------------------------------------------------- disks
def test_disjoint_disk_is_exactly_zero():
    rep = disk_intersection_area([D45], Disk((5.0, 0.0), 1.0))
    assert rep.disjoint and rep.estimate == 0.0 and rep.upper == 0.0


def _disk_cone_area(cx, cy, r, cone):
    """Area of disk cap cone by integrating chord-interval overlaps in y."""
    vx, vy = cone.vertex

    def length(y):
        half = math.sqrt(max(0.0, r * r - (y - cy) ** 2))
        h = y - vy
        a, b = sorted((vx + h * math.tan(cone.phi1), vx + h * math.tan(cone.phi2)))
        return max(0.0, min(b, cx + half) - max(a, cx - half))

    return quad(length, cy - r, cy + r, points=[vy], limit=200, epsabs=1e-12)[0]


def test_disk_over_clipped_piece():
    # the disk circumscribing the piece of D45 between heights 0 and 1
    B = Disk((0.0, 1.0), 1.0)
    expect = _disk_cone_area(0.0, 1.0, 1.0, D45)
    rep = disk_intersection_area([D45], B, 1_000_000, seed=4)
    assert abs(rep.estimate - expect) <= 4 * rep.stderr
    assert rep.strip_bound >= expect - 1e-12


def test_disk_requires_positive_radius():
    with pytest.raises(GeometryError):
        Disk((0, 0), 0.0)


# ---------------------------------------------------------------- box counting
def test_segment_dimension():
    s = box_dimension_estimate(segments=[[(0.0, 0.0), (1.0, 0.0)]], scales=dyadic_scales(4, 10))
    assert s.slope == pytest.approx(1.0, abs=0.05)


def test_square_dimension():
    ys = (np.arange(2048) + 0.5) / 2048
    segs = np.stack([np.stack([np.zeros_like(ys), ys], 1), np.stack([np.ones_like(ys) - 1e-12, ys], 1)], 1)
    s = box_dimension_estimate(segments=segs, scales=dyadic_scales(4, 10))
    assert s.slope == pytest.approx(2.0, abs=0.05)


def test_cantor_dimension():
    s = box_dimension_estimate(segments=cantor_segments(10), scales=dyadic_scales(4, 10))
    assert s.slope == pytest.approx(math.log(2) / math.log(3), abs=0.05)


def test_cantor_segments_structure():
    segs = cantor_segments(3)
    assert segs.shape == (8, 2, 2)
    assert segs[0, 0, 0] == 0.0 and segs[-1, 1, 0] == pytest.approx(1.0)
    assert np.allclose(segs[:, 1, 0] - segs[:, 0, 0], 1 / 27)


def test_counts_nonincreasing_in_scale():
    rng = np.random.default_rng(0)
    segs = rng.uniform(0, 1, (20, 2, 2))
    counts = box_counts(segments=segs, scales=dyadic_scales(2, 8))
    assert all(a <= b for a, b in zip(counts, counts[1:]))


def test_segment_rasterisation_matches_dense_sampling():
    rng = np.random.default_rng(1)
    segs = rng.uniform(-1, 1, (30, 2, 2))
    for s in (2.0 ** -3, 2.0 ** -5):
        exact = box_counts(segments=segs, scales=[s])[0]
        sampled = box_count_brute(segs, s, samples_per_cell=64)
        assert sampled <= exact <= sampled + len(segs) * 2


def test_grid_aligned_segment_uses_half_open_boxes():
    # a segment on the line x = 0.5 belongs to the boxes to its right
    assert box_counts(segments=[[(0.5, 0.0), (0.5, 0.99)]], scales=[0.5])[0] == 2
    assert box_counts(points=[(0.5, 0.5)], scales=[0.5])[0] == 1


def test_box_dimension_errors_and_csv():
    with pytest.raises(GeometryError):
        box_dimension_estimate(points=[(0, 0)], scales=[0.5, 0.25, 0.125])
    with pytest.raises(GeometryError):
        box_dimension_estimate(points=[(0, 0)], scales=[0.5, 0.5, 0.25, 0.125])
    with pytest.raises(GeometryError):
        box_dimension_estimate(points=np.empty((0, 2)), scales=dyadic_scales(1, 4))
    s = box_dimension_estimate(points=[(0.1, 0.1)], scales=dyadic_scales(1, 4))
    assert isinstance(s, BoxCountSeries)
    assert s.to_csv().splitlines() == ["scale,count", "0.5,1", "0.25,1", "0.125,1", "0.0625,1"]
