"""End-to-end smoke tests for the Python bindings.

Run with the extension module on the path, e.g.:
    PYTHONPATH=build:python pytest tests/python
"""

import json
import math

import pytest

import survode

SIM_CONFIG = {
    "n_subjects": 120,
    "b": 2,
    "M": 2,
    "base_hazards": [0.1, 0.05],
    "covariate_effect": [1.0, -0.5],
    "censoring_hazard": 0.05,
    "observation_rate": 0.9,
    "t_m": 8,
    "seed": 42,
}

TRAIN_CONFIG = {
    "survival_loss_scale": 100.0,
    "learning_rate": 1e-2,
    "batch_size": 25,
    "max_epochs": 3,
    "patience": 3,
    "t_m": 8,
    "seed": 1,
    "hidden_dim_h": 8,
    "latent_dim_l0": 4,
    "latent_dim_l": 4,
}


@pytest.fixture(scope="module")
def sim():
    return survode.simulate(SIM_CONFIG)


@pytest.fixture(scope="module")
def fitted(sim):
    train_set, valid_set, _test = survode.split(sim["dataset"], 0.7, 0.15, 0.15, 3)
    return survode.train(train_set, valid_set, TRAIN_CONFIG)


def test_simulate_shapes(sim):
    ds = sim["dataset"]
    assert len(ds) == SIM_CONFIG["n_subjects"]
    assert ds.n_event_types == 2
    rec = ds.records[0]
    assert rec["observed_time"] >= 1
    assert len(rec["values"]) == len(rec["timestamps"])
    assert len(sim["oracle_cif"]) == SIM_CONFIG["n_subjects"]


def test_simulate_deterministic(sim):
    again = survode.simulate(SIM_CONFIG)
    assert again["dataset"].records == sim["dataset"].records
    assert again["oracle_cif"] == sim["oracle_cif"]


def test_split_partitions(sim):
    a, b, c = survode.split(sim["dataset"], 0.5, 0.25, 0.25, 7)
    ids = [r["id"] for part in (a, b, c) for r in part.records]
    assert len(ids) == len(set(ids)) == len(sim["dataset"])


def test_train_history(fitted):
    history = fitted["history"]
    assert 1 <= len(history) <= TRAIN_CONFIG["max_epochs"]
    assert all(math.isfinite(row["valid_loss"]) for row in history)
    best = min(history, key=lambda row: row["valid_loss"])
    assert fitted["best_epoch"] == best["epoch"]


def test_predict_probability_identities(fitted, sim):
    model = fitted["model"]
    assert model.n_event_types == 2
    assert json.loads(model.config_json)["t_m"] == 8
    curves = survode.predict(model, sim["dataset"])
    assert len(curves) == len(sim["dataset"])
    for c in curves:
        assert c["S"][0] == 1.0
        for t in range(len(c["S"])):
            total = c["S"][t] + sum(f[t] for f in c["F"])
            assert abs(total - 1.0) < 1e-9


def test_checkpoint_roundtrip(fitted, sim, tmp_path):
    path = str(tmp_path / "model.bin")
    survode.save_checkpoint(fitted["model"], path)
    loaded = survode.load_checkpoint(path)
    a = survode.predict(fitted["model"], sim["dataset"])
    b = survode.predict(loaded, sim["dataset"])
    assert a == b


def test_metrics(fitted, sim):
    ds = sim["dataset"]
    t_med = survode.event_time_percentiles(ds, 1, [0.5])[0]
    curves = survode.predict(fitted["model"], ds)
    risk = [c["F"][0][int(t_med)] for c in curves]
    auc = survode.td_auc(risk, ds, 1, t_med)
    assert auc is None or 0.0 <= auc <= 1.0
    assert survode.td_brier(risk, ds, 1, t_med) >= 0.0
    aj = survode.aalen_johansen(ds)
    total = aj["S"][-1] + sum(f[-1] for f in aj["F"])
    assert abs(total - 1.0) < 1e-12
    assert survode.rmft(list(range(9)), 8, 1.0) == sum(range(1, 9))


def test_clustering(fitted, sim):
    rows = survode.latent_summary(fitted["model"], sim["dataset"], 1, 8)
    assert len(rows) == len(sim["dataset"])
    km = survode.kmeans(rows, 3, seed=5)
    assert sorted(set(km["labels"])) == [0, 1, 2]
    trace = km["inertia_trace"]
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))


def test_ingest_and_drop(sim, tmp_path):
    # round-trip through the CSV format used by the command-line tools
    feats, outs = tmp_path / "features.csv", tmp_path / "outcomes.csv"
    lines = ["id,time,feature,value"]
    olines = ["id,observed_time,event_type,event_indicator"]
    for r in sim["dataset"].records:
        for ts, row in zip(r["timestamps"], r["values"]):
            for f, v in enumerate(row):
                if v is not None:
                    lines.append(f"{r['id']},{ts},f{f},{v!r}")
        k = r["event_type"] if r["event_type"] is not None else ""
        olines.append(f"{r['id']},{r['observed_time']},{k},{int(r['event_indicator'])}")
    feats.write_text("\n".join(lines) + "\n")
    outs.write_text("\n".join(olines) + "\n")
    ds = survode.ingest_csv(str(feats), str(outs), 2)
    assert len(ds) == len(sim["dataset"])

    dropped = survode.drop_measurements(ds, 0.5, 9)
    n0 = sum(len(r["timestamps"]) for r in ds.records)
    n1 = sum(len(r["timestamps"]) for r in dropped.records)
    assert n1 < n0


def test_validation_errors():
    with pytest.raises(ValueError):
        survode.Dataset(
            [
                {
                    "id": "a",
                    "observed_time": 0,  # must be >= 1
                    "event_type": None,
                    "event_indicator": False,
                    "timestamps": [0.0],
                    "values": [[1.0]],
                }
            ]
        )
    with pytest.raises(ValueError):
        survode.simulate({**SIM_CONFIG, "base_hazards": [0.9, 0.9]})
