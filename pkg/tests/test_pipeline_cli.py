"""End-to-end pipeline and CLI behavior on small synthetic runs."""

import json
import os

import numpy as np
import pytest

from nominality.cli import main, read_score_csv
from nominality.config import config_from_dict, load_config
from nominality.evaluation import evaluate
from nominality.pipeline import run_pipeline
from nominality.reconstructors import PointHyperparams, _init_point_model, load_model
from nominality.scoring import smoothed_score
from nominality.series import load_csv

SMALL_CONFIG = """\
data:
  train: {out}/train.csv
  test: {out}/test.csv
preprocess:
  downsample: 1
  stride: 10
point_model:
  d_lat: 2
  learn_rate: 0.001
  optimizer: adam
  batch_size: 16
  epochs: 3
  seed: 0
sequence_model:
  gamma: 5
  delta: 2
  ridge_lambda: 1.0e-6
gate:
  kind: soft
  theta_percentile: 98.5
  d: 8
eval:
  point_adjust: true
sweep:
  d_values: [1, 2, 4]
synth:
  kind: trig
  seed: 0
  options:
    n_channels: 4
    n_train: 400
    n_test: 300
    segments:
      - [100, 130, frequency-shift]
      - [200, 201, point-noise]
      - [240, 241, point-noise]
output:
  dir: {out}
"""


def write_config(tmp_path, out_name="run"):
    out = tmp_path / out_name
    out.mkdir(exist_ok=True)
    path = tmp_path / f"{out_name}.yaml"
    path.write_text(SMALL_CONFIG.format(out=out))
    return str(path), str(out)


def run_all(config_path):
    for command in ("synth", "train", "score", "eval", "sweep"):
        assert main([command, "--config", config_path]) == 0


@pytest.fixture(scope="module")
def rundir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    config_path, out = write_config(tmp)
    run_all(config_path)
    return config_path, out


class TestEndToEnd:
    def test_all_artifacts_written(self, rundir):
        _, out = rundir
        for name in (
            "train.csv", "test.csv", "synth_spec.json", "point_model.json",
            "sequence_model.json", "preprocess_stats.json", "train_nominality.csv",
            "anomaly.csv", "sequence_anomaly.csv", "nominality.csv", "induced.csv",
            "labels.csv", "eval_report.json", "curve.csv", "sweep.json", "sweep.csv",
        ):
            assert os.path.exists(os.path.join(out, name)), name

    def test_manifests_reproducible_fields(self, rundir):
        _, out = rundir
        score_manifest = json.load(open(os.path.join(out, "manifest_score.json")))
        assert "resolved_theta" in score_manifest
        assert score_manifest["resolved_theta"] > 0
        assert len(score_manifest["config_hash"]) == 64
        train_manifest = json.load(open(os.path.join(out, "manifest_train.json")))
        assert train_manifest["seeds"] == {"point_model": 0}
        assert "final_losses" in train_manifest

    def test_score_alignment(self, rundir):
        _, out = rundir
        induced = read_score_csv(os.path.join(out, "induced.csv"), "induced")
        # gamma=5, test T=300: valid range is [5, 295)
        assert induced.time_origin == 5
        assert len(induced) == 290

    def test_eval_report_contents(self, rundir):
        _, out = rundir
        report = json.load(open(os.path.join(out, "eval_report.json")))
        for key in ("best_f1", "best_threshold", "precision", "recall", "auc", "curve",
                    "pa_best_f1"):
            assert key in report
        assert 0.0 <= report["best_f1"] <= 1.0
        assert report["pa_best_f1"] >= report["best_f1"]

    def test_file_roundtrip_matches_in_process(self, rundir):
        config_path, out = rundir
        cfg = load_config(config_path)
        train = load_csv(os.path.join(out, "train.csv"), label_column="label")
        test = load_csv(os.path.join(out, "test.csv"), label_column="label")
        _, bundle, report = run_pipeline(cfg, train, test)
        on_disk = json.load(open(os.path.join(out, "eval_report.json")))
        assert on_disk["best_f1"] == report.best_f1
        assert on_disk["best_threshold"] == report.best_threshold
        assert on_disk["auc"] == report.auc
        induced = read_score_csv(os.path.join(out, "induced.csv"), "induced")
        np.testing.assert_array_equal(induced.scores, bundle.induced.scores)

    def test_sweep_structure(self, rundir):
        _, out = rundir
        table = json.load(open(os.path.join(out, "sweep.json")))
        assert table["d_values"] == [1, 2, 4]
        rows = table["rows"]
        assert set(rows) == {
            "point", "sequence", "hard_theta_inf", "hard_theta_pct", "soft_theta_pct"
        }
        # d is irrelevant for the raw reconstruction rows
        assert len(set(rows["point"]["best_f1"])) == 1
        assert rows["point"]["best_f1_std"] == 0.0
        assert rows["sequence"]["auc_std"] == 0.0

    def test_sweep_open_hard_gate_equals_smoother(self, rundir):
        _, out = rundir
        table = json.load(open(os.path.join(out, "sweep.json")))
        anomaly = read_score_csv(os.path.join(out, "anomaly.csv"))
        labels = np.loadtxt(
            os.path.join(out, "labels.csv"), delimiter=",", skiprows=1, dtype=np.int64
        )[:, 1]
        for i, d in enumerate(table["d_values"]):
            report = evaluate(smoothed_score(anomaly, d), labels)
            assert table["rows"]["hard_theta_inf"]["best_f1"][i] == report.best_f1
            assert table["rows"]["hard_theta_inf"]["auc"][i] == report.auc


class TestDeterminism:
    def test_bit_identical_reruns(self, tmp_path):
        config_a, out_a = write_config(tmp_path, "a")
        config_b, out_b = write_config(tmp_path, "b")
        run_all(config_a)
        run_all(config_b)
        for name in ("train.csv", "point_model.json", "sequence_model.json",
                     "anomaly.csv", "nominality.csv", "induced.csv",
                     "eval_report.json", "sweep.json"):
            bytes_a = open(os.path.join(out_a, name), "rb").read()
            bytes_b = open(os.path.join(out_b, name), "rb").read()
            assert bytes_a == bytes_b, name


class TestCliBehavior:
    def test_d_zero_makes_induced_equal_anomaly(self, tmp_path):
        config_path, out = write_config(tmp_path)
        assert main(["synth", "--config", config_path]) == 0
        assert main(["train", "--config", config_path]) == 0
        assert main(["score", "--config", config_path, "--d", "0"]) == 0
        anomaly = open(os.path.join(out, "anomaly.csv")).read()
        induced = open(os.path.join(out, "induced.csv")).read()
        assert anomaly == induced

    def test_missing_train_file_exit_3(self, tmp_path, capsys):
        config_path, _ = write_config(tmp_path)
        assert main(["train", "--config", config_path]) == 3
        assert "train.csv" in capsys.readouterr().err

    def test_bad_config_exit_2(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("point_model:\n  bogus_knob: 3\n")
        assert main(["train", "--config", str(path)]) == 2

    def test_degenerate_labels_exit_3(self, tmp_path):
        config_path, out = write_config(tmp_path)
        # strip every anomaly segment: labels become all zero
        text = open(config_path).read()
        text = text.replace("    segments:\n"
                            "      - [100, 130, frequency-shift]\n"
                            "      - [200, 201, point-noise]\n"
                            "      - [240, 241, point-noise]\n", "")
        open(config_path, "w").write(text)
        assert main(["synth", "--config", config_path]) == 0
        assert main(["train", "--config", config_path]) == 0
        assert main(["score", "--config", config_path]) == 0
        assert main(["eval", "--config", config_path]) == 3

    def test_epochs_zero_saves_seeded_init(self, tmp_path):
        config_path, out = write_config(tmp_path)
        text = open(config_path).read().replace("epochs: 3", "epochs: 0")
        open(config_path, "w").write(text)
        assert main(["synth", "--config", config_path]) == 0
        assert main(["train", "--config", config_path]) == 0
        model = load_model(os.path.join(out, "point_model.json"))
        fresh = _init_point_model(4, model.hp)
        np.testing.assert_array_equal(model.enc_w, fresh.enc_w)
        np.testing.assert_array_equal(model.dec_b, fresh.dec_b)

    def test_small_gamma_alignment(self, tmp_path):
        # gamma=2 on a 10-row test split: scores cover [2, 8), time_origin 2.
        out = tmp_path / "o"
        out.mkdir()
        rng = np.random.default_rng(0)
        from nominality.series import LabeledSeries, save_csv

        train = LabeledSeries(rng.standard_normal((60, 2)),
                              labels=np.zeros(60, dtype=int))
        test = LabeledSeries(rng.standard_normal((10, 2)),
                             labels=np.array([0] * 9 + [1]))
        save_csv(train, str(out / "train.csv"))
        save_csv(test, str(out / "test.csv"))
        config = tmp_path / "g.yaml"
        config.write_text(
            f"data:\n  train: {out}/train.csv\n  test: {out}/test.csv\n"
            "point_model:\n  d_lat: 2\n  epochs: 1\n  batch_size: 8\n"
            "sequence_model:\n  gamma: 2\n  delta: 1\n"
            f"output:\n  dir: {out}\n"
        )
        assert main(["train", "--config", str(config)]) == 0
        assert main(["score", "--config", str(config)]) == 0
        induced = read_score_csv(str(out / "induced.csv"), "induced")
        assert len(induced) == 6 and induced.time_origin == 2

    def test_synth_toy_and_sensor(self, tmp_path):
        out = tmp_path / "s"
        out.mkdir()
        toy_cfg = tmp_path / "toy.yaml"
        toy_cfg.write_text(
            "synth:\n  kind: toy\n  options:\n    n_channels: 2\n    alpha: 2.0\n"
            "    n_normal: 50\n    n_anomaly: 20\n"
            f"output:\n  dir: {out}\n"
        )
        assert main(["synth", "--config", str(toy_cfg)]) == 0
        assert os.path.exists(out / "toy.csv")
        header = open(out / "toy.csv").readline().strip().split(",")
        assert header[-2:] == ["label", "nominality"]

        sensor_cfg = tmp_path / "sensor.yaml"
        sensor_cfg.write_text(
            "synth:\n  kind: sensor\n  options:\n    omega: 0.1\n    omega_slow: 0.05\n"
            "    radius: 1.0\n    radius_min: 0.8\n    radius_max: 1.2\n    n_times: 100\n"
            "    slowdown: [30, 40]\n"
            f"output:\n  dir: {out}\n"
        )
        assert main(["synth", "--config", str(sensor_cfg)]) == 0
        sidecar = json.load(open(out / "synth_spec.json"))
        assert sidecar["kind"] == "sensor"
        assert sidecar["tags"][35] == "contextual-anomaly"

    def test_bad_synth_spec_exit_3(self, tmp_path):
        out = tmp_path / "x"
        out.mkdir()
        cfg = tmp_path / "bad_synth.yaml"
        cfg.write_text(
            "synth:\n  kind: trig\n  options:\n    n_channels: 2\n    n_train: 100\n"
            "    n_test: 100\n    segments:\n      - [90, 120, frequency-shift]\n"
            f"output:\n  dir: {out}\n"
        )
        assert main(["synth", "--config", str(cfg)]) == 3
