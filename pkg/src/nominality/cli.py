"""Command-line interface.

Subcommands mirror the pipeline stages: ``synth`` writes a synthetic
dataset, ``train`` fits and saves both models, ``score`` writes the aligned
score CSVs, ``eval`` turns scores plus labels into a report, and ``sweep``
produces the gate-ablation table.  Every command writes a JSON manifest
(config hash, seeds, resolved gate threshold, library versions) sufficient
to reproduce the run bit-exactly; nothing time- or host-dependent goes into
any output file.

Exit codes: 0 success, 2 usage or config error, 3 data error, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__
from .config import PipelineConfig, apply_overrides, load_config
from .errors import ConfigError, DataError, NumericError
from .evaluation import evaluate
from .pipeline import (
    TrainedModels,
    fit_models,
    preprocess_split,
    score_split,
    sweep_table,
)
from .reconstructors import load_model, save_model
from .series import LabeledSeries, MinMaxStats, ScoreSeries, load_csv, save_csv
from .synthetic import (
    SensorSpec,
    ToySpec,
    TrigSpec,
    gen_sensor,
    gen_toy,
    gen_trig,
    trig_preset,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _json_dump(doc: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_manifest(cfg: PipelineConfig, command: str, extra: dict) -> str:
    """Record everything needed to reproduce this command bit-exactly."""
    doc = {
        "command": command,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "versions": {
            "nominality": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        },
    }
    doc.update(extra)
    path = os.path.join(cfg.output_dir, f"manifest_{command}.json")
    _json_dump(doc, path)
    return path


def write_score_csv(series: ScoreSeries, path: str) -> None:
    """Two-column CSV (time_index, score) with the valid-range offset applied.

    Scores are serialized with ``repr``, which round-trips float64 exactly.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_index", "score"])
        for i, value in enumerate(series.scores):
            writer.writerow([i + series.time_origin, repr(float(value))])


def read_score_csv(path: str, kind: str = "anomaly") -> ScoreSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DataError(f"{path}: no score rows")
    origin = int(rows[1][0])
    return ScoreSeries([float(r[1]) for r in rows[1:]], kind, origin)


def write_labels_csv(labels: np.ndarray, time_origin: int, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_index", "label"])
        for i, value in enumerate(labels):
            writer.writerow([i + time_origin, int(value)])


def read_labels_csv(path: str) -> tuple[np.ndarray, int]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DataError(f"{path}: no label rows")
    return np.asarray([int(r[1]) for r in rows[1:]], dtype=np.int64), int(rows[1][0])


def _load_split(cfg: PipelineConfig, which: str) -> LabeledSeries:
    path = getattr(cfg.data, which)
    if path is None:
        raise ConfigError(f"config is missing data.{which}")
    if not os.path.exists(path):
        raise DataError(f"{which} file not found: {path}")
    return load_csv(path, label_column=cfg.data.label_column)


def _stats_path(cfg: PipelineConfig) -> str:
    return os.path.join(cfg.output_dir, "preprocess_stats.json")


def _save_stats(stats: MinMaxStats | None, path: str) -> None:
    doc = None
    if stats is not None:
        doc = {
            "mins": [repr(float(v)) for v in stats.mins],
            "maxs": [repr(float(v)) for v in stats.maxs],
        }
    _json_dump({"minmax": doc}, path)


def _load_stats(path: str) -> MinMaxStats | None:
    with open(path) as fh:
        doc = json.load(fh)
    if doc["minmax"] is None:
        return None
    return MinMaxStats(
        np.asarray([float(v) for v in doc["minmax"]["mins"]]),
        np.asarray([float(v) for v in doc["minmax"]["maxs"]]),
    )


def cmd_synth(cfg: PipelineConfig) -> int:
    """Write a synthetic dataset (CSV + sidecar JSON) into the output dir."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    opts = dict(cfg.synth.options)
    sidecar: dict = {"kind": cfg.synth.kind, "seed": cfg.synth.seed}
    files: list[str] = []
    if cfg.synth.kind == "trig":
        if opts:
            spec = TrigSpec(seed=cfg.synth.seed, **_tupled(opts))
        else:
            spec = trig_preset(cfg.synth.seed)
        result = gen_trig(spec)
        train_path = os.path.join(cfg.output_dir, "train.csv")
        test_path = os.path.join(cfg.output_dir, "test.csv")
        save_csv(result.train, train_path)
        save_csv(result.test, test_path)
        files = [train_path, test_path]
        sidecar["spec"] = dataclasses.asdict(spec)
        sidecar["anomaly_rate"] = result.anomaly_rate
    elif cfg.synth.kind == "toy":
        spec = ToySpec(seed=cfg.synth.seed, **opts)
        result = gen_toy(spec)
        path = os.path.join(cfg.output_dir, "toy.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            dim = spec.n_channels
            header = [f"dxc_{j}" for j in range(dim)] + [f"dxp_{j}" for j in range(dim)]
            writer.writerow(header + ["label", "nominality"])
            for ctx, pt, lab, nom in zip(
                result.context_dev, result.point_dev, result.labels, result.nominality
            ):
                row = [repr(float(v)) for v in ctx] + [repr(float(v)) for v in pt]
                writer.writerow(row + [int(lab), repr(float(nom))])
        files = [path]
        sidecar["spec"] = dataclasses.asdict(spec)
    else:
        spec = SensorSpec(seed=cfg.synth.seed, **_tupled(opts))
        result = gen_sensor(spec)
        path = os.path.join(cfg.output_dir, "sensor.csv")
        save_csv(result.series, path)
        files = [path]
        sidecar["spec"] = dataclasses.asdict(spec)
        sidecar["tags"] = list(result.tags)
    sidecar["files"] = files
    _json_dump(sidecar, os.path.join(cfg.output_dir, "synth_spec.json"))
    write_manifest(cfg, "synth", {"outputs": files})
    return EXIT_OK


def _tupled(opts: dict) -> dict:
    """YAML lists become the tuples the spec dataclasses expect."""
    out = {}
    for key, value in opts.items():
        if isinstance(value, list):
            out[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        else:
            out[key] = value
    return out


def cmd_train(cfg: PipelineConfig) -> int:
    """Fit both models on the training split and save all artifacts."""
    os.makedirs(cfg.output_dir, exist_ok=True)
    train_raw = _load_split(cfg, "train")
    train_prep, stats = preprocess_split(cfg, train_raw)
    models = fit_models(cfg, train_prep)
    models.stats = stats

    point_path = os.path.join(cfg.output_dir, "point_model.json")
    seq_path = os.path.join(cfg.output_dir, "sequence_model.json")
    nominality_path = os.path.join(cfg.output_dir, "train_nominality.csv")
    save_model(models.point, point_path)
    save_model(models.sequence, seq_path)
    _save_stats(stats, _stats_path(cfg))
    write_score_csv(models.train_nominality, nominality_path)
    print(
        f"point model: first epoch loss {models.point.first_epoch_loss}, "
        f"final epoch loss {models.point.final_epoch_loss}"
    )
    print(f"sequence model: normal-equation residual {models.sequence.fit_residual:.3e}")
    write_manifest(
        cfg,
        "train",
        {
            "seeds": {"point_model": cfg.point_model.seed},
            "final_losses": {
                "point_first_epoch": models.point.first_epoch_loss,
                "point_final_epoch": models.point.final_epoch_loss,
                "sequence_fit_residual": models.sequence.fit_residual,
            },
            "outputs": [point_path, seq_path, nominality_path],
        },
    )
    return EXIT_OK


def _load_models(cfg: PipelineConfig) -> TrainedModels:
    point_path = os.path.join(cfg.output_dir, "point_model.json")
    seq_path = os.path.join(cfg.output_dir, "sequence_model.json")
    nominality_path = os.path.join(cfg.output_dir, "train_nominality.csv")
    for path in (point_path, seq_path, nominality_path):
        if not os.path.exists(path):
            raise DataError(f"missing training artifact: {path} (run 'train' first)")
    return TrainedModels(
        point=load_model(point_path),
        sequence=load_model(seq_path),
        stats=_load_stats(_stats_path(cfg)),
        train_nominality=read_score_csv(nominality_path, "nominality"),
    )


def cmd_score(cfg: PipelineConfig) -> int:
    """Score the test split and write the aligned score CSVs."""
    models = _load_models(cfg)
    test_raw = _load_split(cfg, "test")
    test_prep, _ = preprocess_split(cfg, test_raw, models.stats)
    bundle = score_split(cfg, models, test_prep)

    outputs = {}
    for name, series in (
        ("anomaly", bundle.anomaly),
        ("sequence_anomaly", bundle.seq_anomaly),
        ("nominality", bundle.nominality),
        ("induced", bundle.induced),
    ):
        path = os.path.join(cfg.output_dir, f"{name}.csv")
        write_score_csv(series, path)
        outputs[name] = path
    if bundle.labels is not None:
        labels_path = os.path.join(cfg.output_dir, "labels.csv")
        write_labels_csv(bundle.labels, bundle.induced.time_origin, labels_path)
        outputs["labels"] = labels_path
    write_manifest(
        cfg,
        "score",
        {"resolved_theta": bundle.theta, "outputs": sorted(outputs.values())},
    )
    return EXIT_OK


def cmd_eval(cfg: PipelineConfig, scores_path: str | None, labels_path: str | None) -> int:
    """Evaluate a score CSV against the aligned label CSV."""
    scores_path = scores_path or os.path.join(cfg.output_dir, "induced.csv")
    labels_path = labels_path or os.path.join(cfg.output_dir, "labels.csv")
    for path in (scores_path, labels_path):
        if not os.path.exists(path):
            raise DataError(f"missing input: {path}")
    scores = read_score_csv(scores_path, "induced")
    labels, label_origin = read_labels_csv(labels_path)
    if label_origin != scores.time_origin or labels.shape[0] != len(scores):
        raise DataError(
            f"labels ({labels_path}) are not aligned with scores ({scores_path})"
        )
    report = evaluate(
        scores,
        labels,
        point_adjusted=cfg.eval.point_adjust,
        spike_interval=cfg.eval.spike_interval,
    )
    report_path = os.path.join(cfg.output_dir, "eval_report.json")
    with open(report_path, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    curve_path = os.path.join(cfg.output_dir, "curve.csv")
    with open(curve_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall", "f1"])
        for row in report.curve:
            writer.writerow([repr(float(v)) for v in row])
    print(f"best F1 {report.best_f1:.6f} at threshold {report.best_threshold!r}")
    write_manifest(
        cfg, "eval", {"inputs": [scores_path, labels_path], "outputs": [report_path, curve_path]}
    )
    return EXIT_OK


def cmd_sweep(cfg: PipelineConfig) -> int:
    """Run the gate-ablation table over the configured induction lengths."""
    models = _load_models(cfg)
    test_raw = _load_split(cfg, "test")
    test_prep, _ = preprocess_split(cfg, test_raw, models.stats)
    table = sweep_table(cfg, models, test_prep)

    json_path = os.path.join(cfg.output_dir, "sweep.json")
    _json_dump(table, json_path)
    csv_path = os.path.join(cfg.output_dir, "sweep.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "d", "auc", "best_f1"])
        for method, row in table["rows"].items():
            for d, auc_val, f1_val in zip(table["d_values"], row["auc"], row["best_f1"]):
                writer.writerow([method, d, repr(auc_val), repr(f1_val)])
            writer.writerow([method, "mean", repr(row["auc_mean"]), repr(row["best_f1_mean"])])
            writer.writerow([method, "std", repr(row["auc_std"]), repr(row["best_f1_std"])])
    write_manifest(
        cfg, "sweep", {"resolved_theta": table["theta"], "outputs": [json_path, csv_path]}
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nominality",
        description="Gated anomaly scoring for multivariate time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("synth", "generate a synthetic dataset"),
        ("train", "fit the point and sequence models"),
        ("score", "write anomaly/nominality/induced score CSVs"),
        ("eval", "evaluate scores against labels"),
        ("sweep", "gate ablation across induction lengths"),
    ):
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", help="YAML config file")
        cmd.add_argument("--d", type=int, help="override the induction length")
        cmd.add_argument("--gate", choices=("soft", "hard"), help="override the gate kind")
        cmd.add_argument(
            "--theta-percentile", type=float, help="override the threshold percentile"
        )
        cmd.add_argument("--seed", type=int, help="override model and synth seeds")
        cmd.add_argument("--out", help="override the output directory")
        if name == "eval":
            cmd.add_argument("--scores", help="score CSV (default: <out>/induced.csv)")
            cmd.add_argument("--labels", help="label CSV (default: <out>/labels.csv)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else PipelineConfig()
        cfg = apply_overrides(
            cfg,
            d=args.d,
            gate_kind=args.gate,
            theta_percentile=args.theta_percentile,
            seed=args.seed,
            out_dir=args.out,
        )
        os.makedirs(cfg.output_dir, exist_ok=True)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "score":
            return cmd_score(cfg)
        if args.command == "eval":
            return cmd_eval(cfg, args.scores, args.labels)
        return cmd_sweep(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
