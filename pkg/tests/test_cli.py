import json
from fractions import Fraction

import pytest

from haarlab.cli import main
from haarlab.filtration import random_tree

from conftest import example_tree_spec


@pytest.fixture
def tree_file(tmp_path):
    spec = example_tree_spec(Fraction(1, 100))
    path = tmp_path / "tree.json"
    path.write_text(json.dumps(spec))
    return str(path)


@pytest.fixture
def weight_file(tmp_path, tree_file):
    path = tmp_path / "weight.json"
    path.write_text(
        json.dumps({"leaf_weights": {"I1": 1, "I2": 100, "I3": 1, "I4": 100}})
    )
    return str(path)


def run(args):
    return main(args)


def test_a2_command(tmp_path, tree_file, weight_file, capsys):
    out = tmp_path / "r"
    assert run(["a2", "--tree", tree_file, "--weight", weight_file, "--out", str(out)]) == 0
    data = json.loads((out / "a2.json").read_text())
    assert data["a2"] == pytest.approx(1.970299)
    assert data["witness"] == "I"


def test_norm_and_scan(tmp_path, tree_file, weight_file):
    out = tmp_path / "r"
    assert run(["norm", "--tree", tree_file, "--weight", weight_file, "--out", str(out)]) == 0
    assert run(
        [
            "scan",
            "--tree", tree_file,
            "--weight", weight_file,
            "--mode", "exhaustive-01",
            "--out", str(out),
        ]
    ) == 0
    data = json.loads((out / "scan.json").read_text())
    assert data["mode"] == "exhaustive-01"
    assert (out / "scan.png").exists()


def test_counterexample_command(tmp_path):
    out = tmp_path / "r"
    assert run(["counterexample", "--eps", "1/100", "--out", str(out)]) == 0
    csv = (out / "counterexample.csv").read_text().splitlines()
    assert csv[0] == "epsilon,a2_tree,a2_unions,norm_unweighted,norm_weighted,lower_bound"
    assert len(csv) == 2
    data = json.loads((out / "counterexample.json").read_text())
    assert data["rows"][0]["lower_bound"] == pytest.approx(5.0)
    assert (out / "counterexample.png").exists()


def test_counterexample_default_eps(tmp_path):
    out = tmp_path / "r"
    assert run(["counterexample", "--out", str(out), "--no-plot"]) == 0
    data = json.loads((out / "counterexample.json").read_text())
    assert len(data["rows"]) == 3


def test_carleson_outer_bellman(tmp_path, tree_file, weight_file):
    out = tmp_path / "r"
    assert run(["carleson", "--tree", tree_file, "--weight", weight_file, "--out", str(out)]) == 0
    assert run(
        ["outer", "--tree", tree_file, "--weight", weight_file, "--budget", "5", "--out", str(out)]
    ) == 0
    assert run(
        ["bellman", "--samples", "3000", "--q-values", "1", "--kinds", "B1", "--out", str(out)]
    ) == 0
    cert = json.loads((out / "bellman.json").read_text())
    assert cert["certificates"][0]["pass"]


def test_t1_bundle(tmp_path):
    out = tmp_path / "r"
    t = random_tree(seed=3, max_depth=3, max_branching=2, measure_law=(0.5, 2))
    bundle = {
        "tree": t.to_spec(),
        "sigma": {aid: 0.5 for aid in t.atom_ids},
        "mu1": {l: 1.0 for l in t.leaf_ids},
        "mu2": {l: 2.0 for l in t.leaf_ids},
    }
    path = tmp_path / "bundle.json"
    path.write_text(json.dumps(bundle))
    assert run(["t1", "--bundle", str(path), "--out", str(out)]) == 0
    data = json.loads((out / "t1.json").read_text())
    assert all(data["bounds"].values())


def test_sigma4_and_suite(tmp_path, tree_file, weight_file):
    out = tmp_path / "r"
    assert run(["sigma4", "--tree", tree_file, "--weight", weight_file, "--out", str(out)]) == 0
    assert run(
        [
            "suite",
            "--trees", "3",
            "--samples", "2000",
            "--budget", "30",
            "--out", str(out),
            "--no-plot",
        ]
    ) == 0
    data = json.loads((out / "suite.json").read_text())
    assert data["failures"] == []
    assert (out / "suite.csv").exists()


def test_reports_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(
            [
                "suite",
                "--trees", "2",
                "--samples", "1000",
                "--budget", "20",
                "--seed", "5",
                "--out", str(out),
                "--no-plot",
            ]
        ) == 0
    assert (a / "suite.json").read_text() == (b / "suite.json").read_text()
    assert (a / "suite.csv").read_text() == (b / "suite.csv").read_text()


def test_worker_count_does_not_change_reports(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["suite", "--trees", "2", "--samples", "1000", "--budget", "20", "--no-plot"]
    monkeypatch.delenv("HAARLAB_THREADS", raising=False)
    assert run(args + ["--out", str(a)]) == 0
    monkeypatch.setenv("HAARLAB_THREADS", "3")
    assert run(args + ["--out", str(b)]) == 0
    assert (a / "suite.json").read_text() == (b / "suite.json").read_text()


def test_bad_inputs_exit_2(tmp_path):
    assert run(["a2", "--tree", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert run(["a2", "--tree", str(bad), "--out", str(tmp_path)]) == 2
    assert run(["scan", "--seed", "1", "--budget", "0", "--out", str(tmp_path)]) == 2


def test_rational_backend_roundtrip(tmp_path, tree_file, weight_file):
    out = tmp_path / "r"
    assert run(
        [
            "t1",
            "--tree", tree_file,
            "--sigma", str(_write_sigma(tmp_path)),
            "--backend", "rational",
            "--out", str(out),
        ]
    ) == 0
    data = json.loads((out / "t1.json").read_text())
    assert data["decomposition"]["residual"] == 0.0


def _write_sigma(tmp_path):
    path = tmp_path / "sigma.json"
    path.write_text(json.dumps({"coefficients": {"I": [1, 2], "J1": [-1, 3]}}))
    return path
