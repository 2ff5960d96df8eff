import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gmtwitness.cones import (
    ConeForest,
    FinenessPolicy,
    admissible_vertex_segment,
    basic_step,
    iterate,
    partition_cone,
    verify_conditions,
    witness_line,
    witness_lines,
)
from gmtwitness.errors import ConeBudgetExceeded, GeometryError, WitnessNotFound
from gmtwitness.measure import cones_membership, strip_union_area
from gmtwitness.planar import (
    DoubleCone,
    Point2,
    Strip,
    cone_contains,
    distance_interval,
    dual_contains,
    signed_distance,
)

from oracles import strip_area

Q = math.pi / 4
E = math.pi / 8
ORIGIN = Point2(0.0, 0.0)
D45 = DoubleCone(ORIGIN, -Q, Q)
D8 = DoubleCone(ORIGIN, -E, E)


def final_list(forest):
    V, P = forest.final
    return list(zip(V.tolist(), P.tolist()))


# ---------------------------------------------------------------- partitions
def test_bisection_cuts():
    part = partition_cone(D45, 2)
    assert part.cuts == (-Q, 0.0, Q)
    assert len(part) == 2


def test_identity_partition():
    assert partition_cone(D45, 1).cones == [D45]


def test_equal_widths():
    part = partition_cone(D8, 4)
    widths = [c.width for c in part.cones]
    assert widths == pytest.approx([math.pi / 16] * 4, abs=1e-15)
    assert part.cones[-1].phi2 == D8.phi2


def test_partition_rejects_zero_pieces():
    with pytest.raises(GeometryError):
        partition_cone(D45, 0)


# ---------------------------------------------------------------- admissible vertices
def test_admissible_segment_symmetric_cone():
    left, right = admissible_vertex_segment(D45, 0.1)
    assert (left.y1, right.y1) == pytest.approx((-0.1, 0.1))
    assert left.y2 == right.y2 == pytest.approx(-0.1)


def test_admissible_segment_half_cone():
    left, right = admissible_vertex_segment(DoubleCone(ORIGIN, 0.0, Q), 0.1)
    assert (left.y1, right.y1) == pytest.approx((-0.1, 0.0), abs=1e-15)


def test_admissible_segment_scales_with_delta():
    D = DoubleCone(Point2(2.0, 1.0), -0.3, 0.9)
    a = admissible_vertex_segment(D, 0.1)
    b = admissible_vertex_segment(D, 0.2)
    for p, q in zip(a, b):
        assert q.y1 - 2.0 == pytest.approx(2 * (p.y1 - 2.0))
        assert q.y2 - 1.0 == pytest.approx(2 * (p.y2 - 1.0))


@given(st.floats(-1.5, 1.4), st.floats(0.01, 3.0), st.floats(0.01, 2.0), st.floats(0, 1))
def test_admissible_points_satisfy_both_cone_constraints(a, w, delta, s):
    b = min(a + w, 1.55)
    D = DoubleCone(ORIGIN, a, b)
    left, right = admissible_vertex_segment(D, delta)
    v = (left.y1 + s * (right.y1 - left.y1), -delta)
    minus_v = (-v[0], -v[1])
    assert cone_contains(D, v, tol=1e-9)
    assert dual_contains(D, minus_v, tol=1e-9)


# ---------------------------------------------------------------- one step
def test_basic_step_example():
    forest = basic_step(D45, 0.1)
    V, _ = forest.final
    assert sorted(V[:, 0].tolist()) == pytest.approx([-0.05, 0.05])
    assert np.all(V[:, 1] == -0.1)
    area = strip_union_area(forest, Strip(-0.1, 0.0))
    assert area == pytest.approx(0.0075, abs=1e-12)
    assert area == pytest.approx(strip_area(final_list(forest), -0.1, 0.0), abs=1e-12)
    # the constant c is the area of D between its vertex and one unit above
    assert forest.c == pytest.approx(strip_union_area([D45], Strip(0.0, 1.0)))
    assert area <= forest.c * 0.1 ** 2


def test_basic_step_dual_containment_samples():
    forest = basic_step(D45, 0.1, eps=0.05)
    rng = np.random.default_rng(0)
    ang = rng.uniform(-Q, Q, 1000)
    rad = rng.uniform(0, 3, 1000)
    pts = np.stack([rad * np.sin(ang), rad * np.cos(ang)], 1)
    for cone in forest.final_cones():
        assert all(dual_contains(cone, p) for p in pts)


def test_basic_step_requires_positive_delta():
    with pytest.raises(GeometryError):
        basic_step(D45, 0.0)


# ---------------------------------------------------------------- iteration
def test_iterate_bound_and_monotone_sequence():
    areas = []
    for N in (2, 4, 8):
        f = iterate(D8, 1.0, N)
        areas.append(strip_union_area(f, Strip(-1.0, 0.0)))
        assert areas[-1] <= 2 * math.tan(E) / N + 1e-9
    # exact areas, cross-checked against the brute-force oracle for N <= 4
    assert areas == pytest.approx([0.22517934987452767, 0.1490243504443495, 0.0881817389409678], abs=1e-12)
    assert areas[0] > areas[1] > areas[2]


def test_iterate_small_forests_match_oracle():
    for N in (1, 2, 4):
        f = iterate(D8, 1.0, N)
        assert strip_union_area(f, Strip(-1.0, 0.0)) == pytest.approx(
            strip_area(final_list(f), -1.0, 0.0), abs=1e-12
        )


def test_single_generation_equals_basic_step():
    a = iterate(D8, 0.7, 1)
    b = basic_step(D8, 0.7)
    assert np.array_equal(a.final[0], b.final[0])
    assert np.array_equal(a.final[1], b.final[1])


def test_substrip_invariant_and_vertex_levels():
    f = iterate(D8, 1.0, 6)
    bound = f.c_prime * f.delta ** 2
    for k in range(1, 7):
        V, P = f.generation(k)
        assert np.allclose(V[:, 1], -k * f.delta, atol=1e-12)
        for j in range(1, k + 1):
            a = strip_union_area((V, P), Strip(-j * f.delta, -(j - 1) * f.delta))
            assert a < bound + 1e-9


def test_nested_distance_intervals():
    f = iterate(D8, 1.0, 4)
    rng = np.random.default_rng(1)
    for _ in range(200):
        t = rng.uniform(-math.pi / 2 + E, math.pi / 2 - E)
        rad = 3 * rng.random()
        p = (rad * math.sin(t), rad * math.cos(t))
        idx = rng.integers(f.final[0].shape[0])
        gid = f.snapshots[-1][idx]
        node = f.cone(gid)
        lo, hi = distance_interval(node.cone, p)
        while node.generation > 0:
            parent = f.cone(node.parent)
            plo, phi = distance_interval(parent.cone, p)
            # the child interval, restricted to the child's angles, contains the
            # untranslated child's interval
            untranslated = DoubleCone(parent.cone.vertex, node.cone.phi1, node.cone.phi2)
            ulo, uhi = distance_interval(untranslated, p)
            clo, chi = distance_interval(node.cone, p)
            assert clo <= ulo + 1e-12 and chi >= uhi - 1e-12
            node = parent


def test_upper_part_of_original_cone_is_covered():
    f = iterate(D8, 1.0, 5)
    V, P = f.final
    inside = cones_membership(V, P, tol=1e-12)
    ys = np.linspace(0.0, 3.0, 61)
    pts = [(s * y * math.tan(E), y) for y in ys for s in np.linspace(-1, 1, 21)]
    assert inside(np.array(pts)).all()


def test_iterate_is_deterministic():
    a = iterate(D8, 1.0, 5, 0.05)
    b = iterate(D8, 1.0, 5, 0.05)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


def test_json_round_trip():
    f = iterate(D8, 1.0, 3, 0.05)
    g = ConeForest.from_dict(json.loads(json.dumps(f.to_dict())))
    assert g.branching == f.branching
    for a, b in zip(f.vertices, g.vertices):
        assert np.array_equal(a, b)
    for a, b in zip(f.parents, g.parents):
        assert np.array_equal(a, b)
    assert g.to_dict() == f.to_dict()


def test_cone_records_and_translations():
    f = iterate(D45, 1.0, 2)
    cones = f.cones
    assert len(cones) == f.n_cones == 1 + 2 + 4
    child = cones[-1]
    parent = cones[child.parent]
    assert child.generation == 2 and parent.generation == 1
    assert child.translation.y2 == pytest.approx(-0.5)
    # minus the translation lies in the dual sector of the untranslated child
    D_i = DoubleCone(parent.cone.vertex, child.cone.phi1, child.cone.phi2)
    tip = (D_i.vertex[0] - child.translation[0], D_i.vertex[1] - child.translation[1])
    assert dual_contains(D_i, tip)


def test_cone_cap_raises():
    with pytest.raises(ConeBudgetExceeded):
        iterate(D8, 1.0, 8, cone_cap=100)


def test_adaptive_refinement_meets_neighbourhood_budget():
    f = iterate(D8, 1.0, 4, 0.05)
    assert f.branching[0] > 2
    rep = verify_conditions(f, samples=200, seed=0)
    assert rep.neighborhood_sup <= 0.05
    assert rep.neighborhood_sampled_max <= rep.neighborhood_sup + 1e-12


def test_invalid_iterate_arguments():
    with pytest.raises(GeometryError):
        iterate(D8, 0.0, 2)
    with pytest.raises(GeometryError):
        iterate(D8, 1.0, 0)
    with pytest.raises(GeometryError):
        iterate(D8, 1.0, 2, eps=0.0)
    with pytest.raises(GeometryError):
        FinenessPolicy(m=0)


# ---------------------------------------------------------------- verification
def test_verify_iterated_forest():
    f = iterate(D8, 1.0, 4, 0.05)
    rep = verify_conditions(f, samples=1000, seed=7)
    assert rep.surjectivity_pass_rate == 1.0
    assert rep.surjectivity_max_error <= 1e-9
    assert rep.passed, rep.flags
    assert rep.dual_containment_pass
    assert rep.vertex_level_max_deviation <= 1e-12
    assert rep.drift_bound > 0


def test_verify_trivial_forest():
    rep = verify_conditions(ConeForest.trivial(D8), samples=100)
    assert rep.passed
    assert rep.strip_area == 0.0


def test_verify_flags_corrupted_vertex():
    f = iterate(D8, 1.0, 4)
    f.vertices[2][0, 1] = -f.delta / 2
    rep = verify_conditions(f, samples=50)
    assert not rep.flags["vertex_level"]
    assert not rep.passed


def test_verify_is_deterministic():
    f = iterate(D8, 1.0, 3, 0.05)
    a = verify_conditions(f, samples=300, seed=3).to_dict()
    b = verify_conditions(f, samples=300, seed=3).to_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


# ---------------------------------------------------------------- witnesses
def test_witness_line_example():
    f = iterate(D45, 1.0, 4, 0.05)
    ell = witness_line(f, (0.0, 2.0), 1.0)
    assert abs(signed_distance((0.0, 2.0), ell) - 1.0) <= 1e-9
    V, P = f.final
    assert any(
        abs(signed_distance(v, ell)) <= 1e-9 and p[0] - 1e-12 <= ell.theta <= p[1] + 1e-12
        for v, p in zip(V, P)
    )


def test_witness_line_zero_distance_on_axis():
    f = iterate(D45, 1.0, 4, 0.05)
    ell = witness_line(f, (0.0, 1.5), 0.0)
    assert abs(signed_distance((0.0, 1.5), ell)) <= 1e-9


def test_witness_line_rejects_out_of_range():
    f = iterate(D45, 1.0, 2)
    with pytest.raises(WitnessNotFound):
        witness_line(f, (0.0, 2.0), 2.0)
    with pytest.raises(WitnessNotFound):
        witness_line(f, (0.0, -2.0), 0.0)


@given(st.floats(E - math.pi / 2, math.pi / 2 - E), st.floats(0.0, 5.0), st.floats(0, 1))
def test_witness_lines_cover_interval(t, rad, s):
    f = _forest_cache()
    p = np.array([[rad * math.sin(t), rad * math.cos(t)]])
    lo, hi = distance_interval(D8, p[0])
    r = lo + s * (hi - lo)
    _, theta, offset, ok = witness_lines(f, p, [r])
    assert ok[0]
    d = -p[0, 0] * math.cos(theta[0]) + p[0, 1] * math.sin(theta[0]) - offset[0]
    assert abs(d - r) <= 1e-9


_CACHE = {}


def _forest_cache():
    if "f" not in _CACHE:
        _CACHE["f"] = iterate(D8, 1.0, 5)
    return _CACHE["f"]
