import json
import math

import pytest

from gmtwitness.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main

PHI = ["--set", f"phi1={-math.pi / 8!r}", "--set", f"phi2={math.pi / 8!r}"]


def run(tmp_path, name, *args, sub="out"):
    out = tmp_path / sub
    return main([name, "--out", str(out), *args]), out


@pytest.fixture(scope="module")
def forest_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("forest")
    code, out = run(tmp, "construct", *PHI, "--set", "R=1", "--set", "N=4", "--set", "eps=0.05")
    assert code == EXIT_OK
    return out


def test_construct_writes_artifacts(forest_dir):
    names = sorted(p.name for p in forest_dir.iterdir())
    assert names == ["areas.csv", "fineness.json", "forest.json", "forest.svg"]
    csv = (forest_dir / "areas.csv").read_bytes()
    assert csv.startswith(b"generation,strip_lo,strip_hi,area,bound,pass\r\n")
    assert (forest_dir / "forest.svg").read_text().startswith("<?xml")


def test_verify_passes_on_constructed_forest(tmp_path, forest_dir):
    code, out = run(tmp_path, "verify", "--set", f"forest={forest_dir / 'forest.json'}", "--set", "eps=0.05")
    assert code == EXIT_OK
    assert json.loads((out / "report.json").read_text())["passed"]


def test_verify_fails_on_corrupted_forest(tmp_path, forest_dir):
    doc = json.loads((forest_dir / "forest.json").read_text())
    last = doc["cones"][-1]
    last["vertex"][0] += 0.3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out = run(tmp_path, "verify", "--set", f"forest={bad}", "--set", "eps=0.05")
    assert code == EXIT_FAIL
    assert not json.loads((out / "report.json").read_text())["passed"]


def test_runs_are_byte_identical(tmp_path):
    args = [*PHI, "--set", "R=1", "--set", "N=8", "--seed", "11"]
    _, a = run(tmp_path, "construct", *args, sub="a")
    _, b = run(tmp_path, "construct", *args, sub="b")
    for p in sorted(a.iterdir()):
        assert p.read_bytes() == (b / p.name).read_bytes(), p.name


def test_bad_config_exits_two(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert main(["construct", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert run(tmp_path, "construct", "--set", "R=1")[0] == EXIT_CONFIG
    assert run(tmp_path, "construct", "--set", "phi1=1", "--set", "phi2=0.5", "--set", "R=1", "--set", "N=2")[0] == EXIT_CONFIG
    assert main(["construct", "--seed", "-1", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"phi1": -0.3, "phi2": 0.3, "R": 1, "N": 1}))
    code, out = run(tmp_path, "construct", "--config", str(cfg), "--set", "N=2")
    assert code == EXIT_OK
    assert json.loads((out / "forest.json").read_text())["params"]["N"] == 2


def test_cone_cap_is_enforced(tmp_path):
    code, _ = run(tmp_path, "construct", *PHI, "--set", "R=1", "--set", "N=8", "--cone-cap", "10")
    assert code == EXIT_FAIL


def test_measure(tmp_path):
    code, out = run(
        tmp_path, "measure", *PHI, "--set", "R=1", "--set", "N=2", "--set", "mc_samples=100000",
        "--set", 'disks=[{"center": [0, -0.5], "radius": 0.1}]',
    )
    assert code == EXIT_OK
    assert (out / "areas.csv").exists() and (out / "disks.csv").exists()


def test_nikodym(tmp_path):
    code, out = run(
        tmp_path, "nikodym", "--set", "x0=[0.1, 1.0]", "--set", "r0=0.8", "--set", "theta0=0",
        "--set", 'disk={"center": [0, -1], "radius": 0.2}', "--set", f"eta={math.pi / 8!r}",
        "--set", "eps=1e-3", "--set", "mc_samples=20000",
    )
    assert code == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["patch.json", "patch.svg", "witness_grid.csv"]
    assert len((out / "witness_grid.csv").read_text().splitlines()) == 401


def test_snap(tmp_path):
    code, out = run(
        tmp_path, "snap", "--set", 'V={"point": [1, 0], "directions": [[0, 1]]}', "--set", "eps=0.1",
        "--set", 'placements={"random": {"count": 50}}',
    )
    assert code == EXIT_OK
    assert "hausdorff" in (out / "verification.csv").read_text()


def test_cover(tmp_path):
    code, out = run(tmp_path, "cover", "--set", 'V={"point": [1, 0], "directions": [[0, 1]]}', "--set", "eps=0.2", "--set", "samples=2000")
    assert code == EXIT_OK
    assert json.loads((out / "cover.json").read_text())["report"]["passed"]


def test_cover_through_origin_is_a_config_error(tmp_path):
    code, _ = run(tmp_path, "cover", "--set", 'V={"point": [0, 0], "directions": [[0, 1]]}', "--set", "eps=0.2")
    assert code == EXIT_CONFIG


@pytest.mark.parametrize("n,k", [(2, 0), (3, 1)])
def test_tangent(tmp_path, n, k):
    code, out = run(tmp_path, "tangent", "--set", f"n={n}", "--set", f"k={k}", "--set", "count=50", "--set", "radii=[0.6, 1.0]")
    assert code == EXIT_OK
    assert len(json.loads((out / "tangent.json").read_text())["planes"]) == 50


def test_dimension_with_expectation(tmp_path):
    code, out = run(tmp_path, "dimension", "--set", "segments=[[0, 0, 1, 0]]", "--set", 'expect={"slope": 1, "tol": 0.05}')
    assert code == EXIT_OK
    assert json.loads((out / "fit.json").read_text())["slope"] == pytest.approx(1.0, abs=0.05)
    code, _ = run(tmp_path, "dimension", "--set", "segments=[[0, 0, 1, 0]]", "--set", 'expect={"slope": 2, "tol": 0.05}', sub="o2")
    assert code == EXIT_FAIL
