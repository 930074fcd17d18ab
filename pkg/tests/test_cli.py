"""End-to-end CLI runs against files on disk."""

import json

import numpy as np
import pytest

from roelab.cli import main
from roelab.fixtures import hadamard_fixture
from roelab.maps import PointMap
from roelab.operators import FiberedSpace, random_band_unitary
from roelab.serialize import report_bytes, save_map, save_space, write_operator
from roelab.spaces import path_space


@pytest.fixture
def hadamard_files(tmp_path):
    fib, U = hadamard_fixture()
    space = tmp_path / "space.json"
    unitary = tmp_path / "U.bin"
    save_space(space, fib.base)
    write_operator(unitary, U)
    return str(space), str(unitary)


def run(argv):
    return main(argv)


def read_without_timings(path):
    data = json.loads(open(path).read())
    data.pop("timings", None)
    return report_bytes(data)


def test_extract_hadamard(hadamard_files, tmp_path):
    space, unitary = hadamard_files
    out = tmp_path / "extract.json"
    code = run(["extract", "--unitary", unitary, "--space", space,
                "--delta", "0.5", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    results = report["results"]
    assert results["R"] == 0.0
    assert results["witness_g"] == pytest.approx([0.70711, 0.70711], abs=1e-5)
    assert report["scenario"]["kind"] == "extract"
    assert "roelab" in report["versions"]


def test_witness_hadamard(hadamard_files, tmp_path):
    space, unitary = hadamard_files
    out = tmp_path / "witness.json"
    code = run(["witness", "--unitary", unitary, "--space", space,
                "--y", "0", "--radius", "2", "--out", str(out)])
    assert code == 0
    results = json.loads(out.read_text())["results"]
    assert results["delta_actual"] == pytest.approx(0.70711, abs=1e-5)
    assert results["certificate"] == pytest.approx(0.5, abs=1e-5)
    assert results["bound"] == pytest.approx(0.35355, abs=1e-5)


def test_cover_halving_map(tmp_path):
    f = PointMap(path_space(10), path_space(5), [i // 2 for i in range(10)])
    map_path = tmp_path / "halving.json"
    save_map(map_path, f)
    out = tmp_path / "cover.json"
    saved = tmp_path / "W.bin"
    code = run(["cover", "--map", str(map_path), "--fibers", "1",
                "--save-unitary", str(saved), "--out", str(out)])
    assert code == 0
    results = json.loads(out.read_text())["results"]
    assert results["unitarity_residual"] <= 1e-12
    assert results["support_radius"] == 0.0
    assert saved.exists()


def test_ql_banded_unitary(tmp_path):
    X = path_space(8)
    fib = FiberedSpace.uniform(X, 1)
    V = random_band_unitary(fib, 2.0, 1, seed=0)
    space, unitary = tmp_path / "space.json", tmp_path / "V.bin"
    save_space(space, X)
    write_operator(unitary, V)
    out = tmp_path / "ql.json"
    code = run(["ql", "--unitary", str(unitary), "--space", str(space),
                "--radius", "2", "--out", str(out)])
    assert code == 0
    results = json.loads(out.read_text())["results"]
    assert results["violation_lower"] <= 1e-12
    assert results["exact"] is True


def test_outer_roundtrip_cli(tmp_path):
    X = path_space(8)
    fib = FiberedSpace.uniform(X, 1)
    V = random_band_unitary(fib, 2.0, 1, seed=1)
    space, unitary = tmp_path / "space.json", tmp_path / "V.bin"
    save_space(space, X)
    write_operator(unitary, V)
    out = tmp_path / "outer.json"
    code = run(["outer", "--unitary", str(unitary), "--space", str(space),
                "--radius-grid", "0,2,4", "--out", str(out)])
    assert code == 0
    results = json.loads(out.read_text())["results"]
    assert [w[0] for w in results["windows"]] == [0.0, 2.0, 4.0]


def test_sweep_writes_rows_and_csv(tmp_path):
    out = tmp_path / "sweep.json"
    csv = tmp_path / "sweep.csv"
    code = run(["sweep", "--h", "identity", "--n", "8", "--seeds", "3",
                "--csv", str(csv), "--out", str(out)])
    assert code == 0
    rows = json.loads(out.read_text())["results"]["rows"]
    assert [r["seed"] for r in rows] == [0, 1, 2]
    assert all(r["verdict"] for r in rows)
    lines = csv.read_text().strip().split("\n")
    assert len(lines) == 4
    assert lines[0].startswith("seed,R,")


def test_sweep_deterministic_across_threads(tmp_path, monkeypatch):
    outputs = []
    for threads in ("1", "8"):
        monkeypatch.setenv("ROELAB_THREADS", threads)
        out = tmp_path / f"sweep_{threads}.json"
        code = run(["sweep", "--h", "reflection", "--n", "8", "--seeds", "4",
                    "--out", str(out)])
        assert code == 0
        outputs.append(read_without_timings(out))
    assert outputs[0] == outputs[1]


def test_repeated_run_identical_apart_from_timings(hadamard_files, tmp_path):
    space, unitary = hadamard_files
    reports = []
    for tag in ("a", "b"):
        out = tmp_path / f"extract_{tag}.json"
        assert run(["extract", "--unitary", unitary, "--space", space,
                    "--out", str(out)]) == 0
        reports.append(read_without_timings(out))
    assert reports[0] == reports[1]


def test_malformed_space_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "dist": [[0, 1], [2, 0]]}))
    unitary = tmp_path / "whatever.bin"
    unitary.write_bytes(b"ROELAB1\x00")
    code = run(["extract", "--unitary", str(unitary), "--space", str(bad)])
    assert code == 2
    err = json.loads(capsys.readouterr().out)
    assert err["error"]["type"] == "ValueError"
    assert "symmetr" in err["error"]["message"] or "metric" in err["error"]["message"]


def test_missing_file_exits_2(tmp_path, capsys):
    code = run(["ql", "--unitary", str(tmp_path / "nope.bin"),
                "--space", str(tmp_path / "nope.json"), "--radius", "1"])
    assert code == 2
    err = json.loads(capsys.readouterr().out)
    assert err["error"]["type"] == "FileNotFoundError"
