import json
import math

import numpy as np
import pytest

import sagal


@pytest.fixture(scope="module")
def small():
    return sagal.synthetic(nodes=150, classes=3, features=45, topic_size=15,
                           val=30, test=40, seed=2, name="small")


def test_dataset_shape(small):
    assert small.num_nodes == 150
    assert small.num_classes == 3
    assert small.features.shape == (150, 45)
    assert small.labels.dtype == np.int32
    assert len(small.pool) == 80
    assert set(small.val).isdisjoint(small.test)


def test_roundtrip(small, tmp_path):
    small.save(tmp_path / "d")
    again = sagal.Dataset.load(tmp_path / "d")
    assert again.edges() == small.edges()
    assert np.array_equal(again.features, small.features)
    assert again.stats()["row"] == small.stats()["row"]


def test_missing_dataset_raises(tmp_path):
    with pytest.raises(sagal.DatasetError):
        sagal.Dataset.load(tmp_path / "absent")


def test_stats_ratio_matches_edges(small):
    s = small.stats()
    labels = small.labels
    inter = sum(labels[u] != labels[v] for u, v in small.edges())
    assert s["inter_class_edges"] == inter
    assert math.isclose(sagal.nir_all(small), inter / s["edges"])


def test_propagation_is_symmetric(small):
    indptr, indices, data = sagal.propagation(small, k=2, epsilon=0.0)
    n = small.num_nodes
    dense = np.zeros((n, n))
    for r in range(n):
        dense[r, indices[indptr[r]:indptr[r + 1]]] = data[indptr[r]:indptr[r + 1]]
    assert np.allclose(dense, dense.T, atol=1e-14)


def test_metrics():
    assert sagal.accuracy([0, 1, 0, 0], [0, 1, 2, 1]) == 0.5
    assert sagal.macro_f1([0, 0], [0, 0], 2) == 0.5
    f1, auc = sagal.binary_f1_auc([0.9, 0.8, 0.1], [1, 0, 1])
    assert auc == 0.5
    with pytest.raises(ValueError):
        sagal.binary_f1_auc([0.2, 0.3], [1, 1])


def test_nir_rejects_unknown_node(small):
    with pytest.raises(IndexError):
        sagal.nir(small, [small.num_nodes])


def test_run_is_deterministic(small, tmp_path):
    kwargs = dict(budget=15, runs=2, retrain_epochs=3, final_epochs=30)
    a = sagal.run(small, ["sag", "random"], out=tmp_path / "out", **kwargs)
    b = sagal.run(small, "sag,random", **kwargs)
    assert len(a["runs"]) == 4
    for ra, rb in zip(a["runs"], b["runs"]):
        assert ra["selected"] == rb["selected"]
        assert ra["accuracy"] == rb["accuracy"]
        assert len(ra["selected"]) == 15
        assert len(ra["trace"]) == 15
    on_disk = json.loads((tmp_path / "out" / "results.json").read_text())
    assert [r["selected"] for r in on_disk["runs"]] == [r["selected"] for r in a["runs"]]


def test_run_validates_arguments(small):
    with pytest.raises(ValueError):
        sagal.run(small, ["sag"], lambda_=1.5, runs=1)
    with pytest.raises(ValueError):
        sagal.run(small, ["nope"], runs=1)
