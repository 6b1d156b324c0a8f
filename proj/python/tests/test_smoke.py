import csv
import io
import json

import pytest

import devfp


def test_order_changes_bits():
    v = [0.1] * 10000
    seq = devfp.reduce(v, "sequential")
    pw = devfp.reduce(v, "pairwise")
    assert seq != pw
    assert abs(seq - 1000.0) < 0.1 and abs(pw - 1000.0) < 0.1


def test_trace_demo_and_softmax():
    assert abs(devfp.trace_demo(acc="fp64") - 1.0) < 1e-9
    p = devfp.softmax([1.0, 2.0, 3.0], "streaming")
    assert abs(sum(p) - 1.0) < 1e-6


def test_zoo():
    ids = devfp.valid_configs()
    assert len(ids) == 30
    assert ids == sorted(ids)


def test_forest_round_trip():
    X = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]] * 5
    y = ["zero", "zero", "one", "one"] * 5
    model = devfp.train_forest(X, y, n_trees=10, seed=1)
    assert devfp.predict(model, X[:4]) == y[:4]


def test_errors_surface_as_value_error():
    with pytest.raises(ValueError):
        devfp.reduce([1.0], "tree")
    with pytest.raises(devfp.DevfpError):
        devfp.run_experiment(json.dumps({"experiment": "nope"}))


def test_tiny_experiment():
    spec = {
        "experiment": "closed-world",
        "runs": 1,
        "l": 1,
        "k": 1,
        "suite": {"p1": 3, "p2": 4, "p3": 1, "p4": 1},
        "forest": {"n_trees": 10},
        "threads": 1,
    }
    rows = list(csv.DictReader(io.StringIO(devfp.run_experiment(json.dumps(spec)))))
    assert [r["axis"] for r in rows] == ["engine", "backend", "hardware"]
    assert all(r["condition"] == "T=0" for r in rows)
