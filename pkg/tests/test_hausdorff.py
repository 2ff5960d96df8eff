import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from gmtwitness.arrange import PlacementSet
from gmtwitness.errors import GeometryError, TagMismatch
from gmtwitness.hausdorff import (
    FinitePointCloud,
    Layout,
    directed_distance,
    epsilon_net,
    full_projection_check,
    hausdorff_distance,
    pairwise_distance,
    so2_distance,
    so3_distance,
)


def cloud(pts, tag="points", **kw):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return FinitePointCloud(pts, tag, Layout(kw.get("n", pts.shape[1]), kw.get("scale", False), kw.get("rotation", False)))


def test_singletons():
    assert hausdorff_distance(cloud([[0, 0]]), cloud([[3, 4]])) == pytest.approx(5.0)


def test_self_distance_zero():
    A = cloud(np.random.default_rng(0).normal(size=(50, 2)))
    assert hausdorff_distance(A, A) == 0.0


def test_subset_directed_distance_zero():
    P = np.random.default_rng(1).normal(size=(40, 3))
    A, B = cloud(P[:10]), cloud(P)
    assert directed_distance(A, B) == 0.0
    assert directed_distance(B, A) > 0.0


def test_scaled_product_metric():
    A = cloud([[0.0, 0.0, 1.0]], "scaled", n=2, scale=True)
    B = cloud([[0.3, 0.4, 1.7]], "scaled", n=2, scale=True)
    assert hausdorff_distance(A, B) == pytest.approx(0.7)


def test_angle_wraps_around():
    assert so2_distance(math.pi - 0.1, -math.pi + 0.1) == pytest.approx(0.2)
    L = Layout(2, True, True)
    d = pairwise_distance(np.array([[0, 0, 1, 3.1]]), np.array([[0, 0, 1, -3.1]]), L)
    assert d[0, 0] == pytest.approx(2 * math.pi - 6.2)


def test_so3_quaternion_route_matches_rotation_route():
    a, b = Rotation.random(20, random_state=3).as_rotvec(), Rotation.random(20, random_state=4).as_rotvec()
    A = np.column_stack([np.zeros((20, 3)), np.ones(20), a])
    B = np.column_stack([np.zeros((20, 3)), np.ones(20), b])
    d = np.diag(pairwise_distance(A, B, Layout(3, True, True)))
    assert np.allclose(d, so3_distance(a, b), atol=1e-7)


def test_tag_mismatch():
    with pytest.raises(TagMismatch):
        hausdorff_distance(cloud([[0, 0]]), cloud([[0, 0, 1]], "scaled", n=2, scale=True))


def test_cloud_validation():
    with pytest.raises(GeometryError):
        cloud(np.zeros((0, 2)))
    with pytest.raises(GeometryError):
        cloud([[0, np.nan]])
    with pytest.raises(GeometryError):
        FinitePointCloud(np.zeros((1, 2)), "bogus", Layout(2))


def test_json_roundtrip():
    A = cloud([[0.1, 0.2, 1.5]], "scaled", n=2, scale=True)
    B = FinitePointCloud.from_json(A.to_json())
    assert B.tag == A.tag and np.array_equal(B.points, A.points)


pts = st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=12)


@given(pts, pts, pts)
def test_triangle_inequality(a, b, c):
    A, B, C = cloud(a), cloud(b), cloud(c)
    assert hausdorff_distance(A, C) <= hausdorff_distance(A, B) + hausdorff_distance(B, C) + 1e-9


@given(pts, pts)
def test_kdtree_route_matches_brute_force(a, b):
    A, B = np.array(a), np.array(b)
    D = np.linalg.norm(A[:, None] - B[None], axis=2)
    brute = max(D.min(axis=1).max(), D.min(axis=0).max())
    assert hausdorff_distance(cloud(a), cloud(b)) == pytest.approx(brute, abs=1e-12)


def test_full_projection_check():
    K = PlacementSet([[0.0, 0.0], [1.0, 1.0]], [1.0, 2.0])
    assert full_projection_check(K, [[0, 0], [1, 1]], 0.0)
    assert not full_projection_check(K, [[0, 0], [0.5, 0.5]], 0.1)
    assert full_projection_check(K, [[0.05, 0]], 0.1)


def test_net_of_unit_interval():
    net = epsilon_net({"space": [(0.0, 1.0)]}, 0.25)
    assert net.points[:, 0].tolist() == [0.25, 0.75]
    probe = cloud(np.random.default_rng(5).uniform(0, 1, (10_000, 1)))
    assert directed_distance(probe, net) <= 0.25


def test_net_collapses_for_large_eps():
    net = epsilon_net({"space": [(0.0, 1.0), (0.0, 1.0)]}, 2.0)
    assert len(net) == 1


def test_net_rejects_bad_eps():
    with pytest.raises(GeometryError):
        epsilon_net({"space": [(0.0, 1.0)]}, 0.0)


@pytest.mark.parametrize(
    "bounds,eps",
    [
        ({"space": [(0, 1), (0, 2)]}, 0.1),
        ({"space": [(0, 1), (0, 1)], "scale": (1, 2)}, 0.2),
        ({"space": [(0, 1), (0, 1)], "scale": (1, 2), "rotation": True}, 0.3),
        ({"space": [(0, 1)] * 3, "scale": (1, 2), "rotation": True}, 0.8),
    ],
)
def test_net_covers_random_points(bounds, eps):
    net = epsilon_net(bounds, eps)
    rng = np.random.default_rng(6)
    m = 2000
    cols = [rng.uniform(lo, hi, m) for lo, hi in bounds["space"]]
    if "scale" in bounds:
        cols.append(rng.uniform(*bounds["scale"], m))
    n = len(bounds["space"])
    if bounds.get("rotation"):
        if n == 2:
            cols.append(rng.uniform(-math.pi, math.pi, m))
        else:
            cols.extend(Rotation.random(m, random_state=7).as_rotvec().T)
    probe = FinitePointCloud(np.column_stack(cols), net.tag, net.layout)
    assert directed_distance(probe, net) <= eps
