import csv
import json

import numpy as np
import pytest

import credalcast as cc
from credalcast import serialize
from credalcast.cli import main

from conftest import joint_rain

SPACE = {
    "outcomes": ["cloudy/rain=0", "cloudy/rain=1", "sunny/rain=0",
                 "sunny/rain=1"],
    "feature_of": [0, 0, 1, 1],
    "label_of": [0.0, 1.0, 0.0, 1.0],
}
DATA_MODEL = {"vertices": [joint_rain(0.4, 0.95, 0.05),
                           joint_rain(0.9, 0.85, 0.15)]}


def write_config(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("cli-sim")
    config = write_config(tmp_path / "sim.json", {
        "seed": 13,
        "space": SPACE,
        "data_model": DATA_MODEL,
        "simulate": {"n": 40_000, "selection": "cyclic"},
    })
    out = tmp_path / "sim"
    assert main(["simulate", "--config", config, "--out", str(out)]) == 0
    return out


class TestSimulate:
    def test_writes_dataset_and_metadata(self, sim_dir):
        rows = (sim_dir / "dataset.csv").read_text().splitlines()
        assert rows[0] == "x0,x1,label,group"
        assert len(rows) == 40_001
        meta = json.loads((sim_dir / "metadata.json").read_text())
        assert meta["spec"]["rng"] == "philox4x64-10"

    def test_idempotent_given_seed(self, tmp_path, sim_dir):
        config = write_config(tmp_path / "sim2.json", {
            "seed": 13,
            "space": SPACE,
            "data_model": DATA_MODEL,
            "simulate": {"n": 40_000, "selection": "cyclic"},
        })
        out2 = tmp_path / "sim_again"
        assert main(["simulate", "--config", config, "--out", str(out2)]) == 0
        assert (sim_dir / "dataset.csv").read_bytes() == \
            (out2 / "dataset.csv").read_bytes()
        assert (sim_dir / "metadata.json").read_bytes() == \
            (out2 / "metadata.json").read_bytes()

    def test_schema_rejects_zero_samples(self, tmp_path):
        config = write_config(tmp_path / "bad.json", {
            "space": SPACE,
            "data_model": DATA_MODEL,
            "simulate": {"n": 0, "selection": "cyclic"},
        })
        assert main(["simulate", "--config", config,
                     "--out", str(tmp_path / "o")]) == 2

    def test_unknown_key_rejected(self, tmp_path):
        config = write_config(tmp_path / "bad.json", {
            "space": SPACE,
            "data_model": DATA_MODEL,
            "simulate": {"n": 5, "selection": "cyclic"},
            "surprise": True,
        })
        assert main(["simulate", "--config", config,
                     "--out", str(tmp_path / "o")]) == 2


def train_model(tmp_path, sim_dir, model, loss, out_name, config_overrides,
                model_id=None):
    doc = {
        "seed": 17,
        "space": SPACE,
        "dataset": {"path": str(sim_dir / "dataset.csv"),
                    "test_fraction": 0.25},
        "train": {"model": model, "loss": loss,
                  "config": config_overrides},
    }
    if model_id:
        doc["train"]["id"] = model_id
    config = write_config(tmp_path / f"{out_name}.json", doc)
    out = tmp_path / out_name
    assert main(["train", "--config", config, "--out", str(out)]) == 0
    return out


class TestTrain:
    def test_erm_model_round_trips(self, tmp_path, sim_dir):
        out = train_model(tmp_path, sim_dir, "erm", {"kind": "log"}, "erm",
                          {"erm_iters": 300, "batch": 256}, model_id="erm_log")
        params, standardizer = cc.ModelParams.from_dict(
            serialize.load(out / "erm_log.json"))
        assert params.weights.shape == (2,)
        assert standardizer is None

    def test_dro_writes_runlog_and_trace(self, tmp_path, sim_dir):
        out = train_model(
            tmp_path, sim_dir, "dro", {"kind": "winkler", "c": 0.1}, "dro",
            {"n_outer": 4, "n_inner": 5, "batch": 128}, model_id="dro_01")
        with open(out / "dro_01_runlog.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 4
        assert set(rows[0]) == {"iter", "weighted_loss", "loss_g0", "loss_g1",
                                "lambda_g0", "lambda_g1"}
        with open(out / "dro_01_lambda_trace.csv", newline="") as handle:
            trace_rows = list(csv.DictReader(handle))
        assert len(trace_rows) == 5
        lam = [float(trace_rows[-1]["lambda_g0"]),
               float(trace_rows[-1]["lambda_g1"])]
        assert sum(lam) == pytest.approx(1.0, abs=1e-12)

    def test_gbr_writes_one_model_per_group(self, tmp_path, sim_dir):
        out = train_model(tmp_path, sim_dir, "gbr", {"kind": "log"}, "gbr",
                          {"erm_iters": 200, "batch": 128}, model_id="gbr_log")
        assert (out / "gbr_log_g0.json").exists()
        assert (out / "gbr_log_g1.json").exists()


@pytest.fixture(scope="module")
def trained(tmp_path_factory, sim_dir):
    tmp_path = tmp_path_factory.mktemp("cli-train")
    erm = train_model(tmp_path, sim_dir, "erm", {"kind": "log"}, "m_erm",
                      {"erm_iters": 2500, "lr": 0.05, "full_batch": True},
                      model_id="erm_log")
    gbr = train_model(tmp_path, sim_dir, "gbr", {"kind": "log"}, "m_gbr",
                      {"erm_iters": 2500, "lr": 0.05, "full_batch": True},
                      model_id="gbr_log")
    return {
        "erm": str(erm / "erm_log.json"),
        "gbr": [str(gbr / "gbr_log_g0.json"), str(gbr / "gbr_log_g1.json")],
    }


def evaluation_config(tmp_path, sim_dir, trained, name):
    return write_config(tmp_path / name, {
        "seed": 17,
        "space": SPACE,
        "dataset": {"path": str(sim_dir / "dataset.csv"),
                    "test_fraction": 0.25},
        "models": [
            {"id": "erm_log", "kind": "erm", "path": trained["erm"]},
            {"id": "gbr", "kind": "gbr", "paths": trained["gbr"]},
        ],
        "losses": [{"kind": "cost_sensitive", "c": 0.1},
                   {"kind": "cost_sensitive", "c": 0.7}],
    })


class TestEvaluate:
    def test_score_table(self, tmp_path, sim_dir, trained):
        config = evaluation_config(tmp_path, sim_dir, trained, "eval.json")
        out = tmp_path / "scores"
        assert main(["evaluate-score", "--config", config,
                     "--out", str(out)]) == 0
        with open(out / "scores.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 4  # 2 forecasts x 2 losses
        table = {(r["forecast_id"], r["loss_id"]):
                 float(r["ip_score_train"]) for r in rows}
        # empirical analogue of the worked example: the conditioned forecast
        # scores near 0.059 and the pooled precise model near 0.029
        assert table[("gbr", "cost_sensitive(0.1)")] == pytest.approx(
            0.059, abs=0.01)
        assert table[("erm_log", "cost_sensitive(0.1)")] == pytest.approx(
            0.029, abs=0.01)

    def test_calibration_table(self, tmp_path, sim_dir, trained):
        config = evaluation_config(tmp_path, sim_dir, trained, "cal.json")
        out = tmp_path / "cal"
        assert main(["evaluate-calibration", "--config", config,
                     "--out", str(out), "--tolerance", "0.01"]) == 0
        with open(out / "calibration.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert set(rows[0]) == {"forecast_id", "loss_id", "data_split",
                                "block_label", "residual", "diagnostic_II",
                                "subcalibrated"}
        splits = {r["data_split"] for r in rows}
        assert splits == {"train", "test"}
        gbr_rows = [r for r in rows if r["forecast_id"] == "gbr"
                    and r["data_split"] == "train"]
        assert gbr_rows
        for row in gbr_rows:
            assert int(row["subcalibrated"]) == 1

    def test_missing_model_path_is_config_error(self, tmp_path, sim_dir,
                                                trained):
        config = write_config(tmp_path / "missing.json", {
            "space": SPACE,
            "dataset": {"path": str(sim_dir / "dataset.csv")},
            "models": [{"id": "x", "kind": "erm", "path": "/nope/model.json"}],
            "losses": [{"kind": "cost_sensitive", "c": 0.1}],
        })
        assert main(["evaluate-score", "--config", config,
                     "--out", str(tmp_path / "o")]) == 2


class TestMaxent:
    def test_lifted_example(self, tmp_path):
        config = write_config(tmp_path / "maxent.json", {
            "space": SPACE,
            "data_model": DATA_MODEL,
            "loss": {"kind": "cost_sensitive", "c": 0.1},
        })
        out = tmp_path / "mx"
        assert main(["maxent", "--config", config, "--out", str(out)]) == 0
        doc = json.loads((out / "maxent.json").read_text())
        assert doc["lambda_star"] == pytest.approx([1.0, 0.0], abs=1e-9)
        assert doc["maxent_value"] == pytest.approx(0.029, abs=1e-12)
        assert doc["bayes_unique"] is True

    def test_explicit_matrix_counterexample(self, tmp_path):
        config = write_config(tmp_path / "m2.json", {
            "space": {"outcomes": ["w1", "w2"], "feature_of": [0, 0]},
            "data_model": {"vertices": [[1.0, 0.0], [0.0, 1.0]]},
            "loss_matrix": {"actions": ["a1", "a2", "a3"],
                            "entries": [[2, 7], [6, 3], [4, 5]]},
        })
        out = tmp_path / "mx2"
        assert main(["maxent", "--config", config, "--out", str(out)]) == 0
        doc = json.loads((out / "maxent.json").read_text())
        assert doc["maxent_value"] == pytest.approx(4.5, abs=1e-9)
        assert doc["bayes_unique"] is False

    def test_singleton(self, tmp_path):
        config = write_config(tmp_path / "m3.json", {
            "space": SPACE,
            "data_model": {"vertices": [joint_rain(0.5, 0.9, 0.2)]},
            "loss": {"kind": "cost_sensitive", "c": 0.3},
        })
        out = tmp_path / "mx3"
        assert main(["maxent", "--config", config, "--out", str(out)]) == 0
        doc = json.loads((out / "maxent.json").read_text())
        assert doc["lambda_star"] == [1.0]


def test_config_file_not_found():
    assert main(["maxent", "--config", "/does/not/exist.json",
                 "--out", "/tmp/x"]) == 2
