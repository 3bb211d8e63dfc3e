"""End-to-end orchestration shared by the CLI and the test suite.

The flow mirrors the scoring algorithm: preprocess both splits with
training-split statistics, fit the point and sequence models on the training
split, reconstruct the test split both ways, derive anomaly/nominality
scores on the common valid range, resolve the gate threshold from the
training nominality distribution, and produce the induced score plus an
evaluation report.  Labels are trimmed by the same valid range via
``time_origin`` arithmetic so callers never align offsets by hand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import PipelineConfig
from .errors import DataError, ShapeError
from .evaluation import EvalReport, evaluate
from .reconstructors import (
    PointHyperparams,
    PointModel,
    SequenceModel,
    make_pair,
    reconstruct_points,
    reconstruct_sequence,
    train_point_model,
    train_sequence_model,
)
from .scoring import (
    GateConfig,
    anomaly_score,
    induced_anomaly_score,
    nominality_score,
    resolve_theta,
    sequence_anomaly_score,
    smoothed_score,
)
from .series import (
    LabeledSeries,
    MinMaxStats,
    ScoreSeries,
    downsample,
    minmax_apply,
    minmax_fit,
)


@dataclass
class TrainedModels:
    """Fitted models plus everything needed to score a new split."""

    point: PointModel
    sequence: SequenceModel
    stats: MinMaxStats | None
    train_nominality: ScoreSeries


@dataclass
class ScoreBundle:
    """All per-time-point scores for one split, aligned on the valid range."""

    anomaly: ScoreSeries
    seq_anomaly: ScoreSeries
    nominality: ScoreSeries
    induced: ScoreSeries
    labels: np.ndarray | None
    theta: float


def preprocess_split(
    cfg: PipelineConfig,
    series: LabeledSeries,
    stats: MinMaxStats | None = None,
) -> tuple[LabeledSeries, MinMaxStats | None]:
    """Downsample, then normalize with (or fit) min-max statistics.

    Pass ``stats=None`` for the training split (statistics are fitted and
    returned) and the fitted statistics for the test split.
    """
    out = downsample(series, cfg.preprocess.downsample)
    if cfg.preprocess.normalization == "none":
        return out, stats
    if stats is None:
        stats = minmax_fit(out)
    return minmax_apply(out, stats), stats


def fit_models(cfg: PipelineConfig, train: LabeledSeries) -> TrainedModels:
    """Train both reconstructors and record the training nominality scores."""
    hp = PointHyperparams(
        latent_dim=cfg.point_model.d_lat,
        learn_rate=cfg.point_model.learn_rate,
        epochs=cfg.point_model.epochs,
        batch_size=cfg.point_model.batch_size,
        seed=cfg.point_model.seed,
        optimizer=cfg.point_model.optimizer,
    )
    point = train_point_model(train, hp)
    seq = train_sequence_model(
        train,
        gamma=cfg.sequence_model.gamma,
        delta=cfg.sequence_model.delta,
        ridge_lambda=cfg.sequence_model.ridge_lambda,
        stride=None,
    )
    pair = make_pair(
        reconstruct_points(point, train), reconstruct_sequence(seq, train), seq.gamma
    )
    observed = train.values[pair.valid_range[0] : pair.valid_range[1]]
    train_nominality = nominality_score(pair, observed)
    return TrainedModels(point, seq, None, train_nominality)


def gate_config(cfg: PipelineConfig, d: int | None = None) -> GateConfig:
    """Gate configuration from the config file, optionally overriding d."""
    return GateConfig(
        kind=cfg.gate.kind,
        theta_n=cfg.gate.theta,
        percentile=cfg.gate.theta_percentile,
        d=cfg.gate.d if d is None else d,
    )


def score_split(
    cfg: PipelineConfig, models: TrainedModels, test: LabeledSeries
) -> ScoreBundle:
    """Reconstruct a split both ways and compute all scores on it."""
    gamma = models.sequence.gamma
    delta = models.sequence.delta
    if test.n_times < 2 * gamma + delta:
        raise ShapeError(
            f"test split of length {test.n_times} is shorter than "
            f"2*gamma + delta = {2 * gamma + delta}"
        )
    pair = make_pair(
        reconstruct_points(models.point, test),
        reconstruct_sequence(models.sequence, test),
        gamma,
    )
    lo, hi = pair.valid_range
    observed = test.values[lo:hi]
    a_point = anomaly_score(pair, observed)
    a_seq = sequence_anomaly_score(pair, observed)
    nominality = nominality_score(pair, observed)
    gate_cfg = resolve_theta(gate_config(cfg), models.train_nominality)
    induced = induced_anomaly_score(a_point, nominality, gate_cfg)
    labels = test.labels[lo:hi] if test.labels is not None else None
    return ScoreBundle(a_point, a_seq, nominality, induced, labels, gate_cfg.theta_n)


def evaluate_bundle(cfg: PipelineConfig, bundle: ScoreBundle) -> EvalReport:
    """Evaluate the induced score against the trimmed labels."""
    if bundle.labels is None:
        raise DataError("cannot evaluate: test split has no labels")
    return evaluate(
        bundle.induced,
        bundle.labels,
        point_adjusted=cfg.eval.point_adjust,
        spike_interval=cfg.eval.spike_interval,
    )


def run_pipeline(
    cfg: PipelineConfig, train: LabeledSeries, test: LabeledSeries
) -> tuple[TrainedModels, ScoreBundle, EvalReport]:
    """Single in-process run: preprocess, fit, score, evaluate."""
    train_prep, stats = preprocess_split(cfg, train)
    test_prep, _ = preprocess_split(cfg, test, stats)
    models = fit_models(cfg, train_prep)
    models.stats = stats
    bundle = score_split(cfg, models, test_prep)
    report = evaluate_bundle(cfg, bundle)
    return models, bundle, report


#: Row order of the ablation sweep.
SWEEP_METHODS = (
    "point",
    "sequence",
    "hard_theta_inf",
    "hard_theta_pct",
    "soft_theta_pct",
)


def sweep_table(
    cfg: PipelineConfig, models: TrainedModels, test: LabeledSeries
) -> dict:
    """Five scoring methods evaluated across the configured induction lengths.

    The first two rows use the raw point/sequence reconstruction errors and
    ignore d; the gated rows reuse the point-based anomaly score.  Returns a
    JSON-ready dict with per-d AUC and best F1 plus their mean and standard
    deviation across d.
    """
    bundle = score_split(cfg, models, test)
    if bundle.labels is None:
        raise DataError("cannot sweep: test split has no labels")
    labels = bundle.labels
    d_values = list(cfg.sweep.d_values)
    theta = bundle.theta

    def metrics(scores: ScoreSeries) -> tuple[float, float]:
        report = evaluate(scores, labels)
        return report.auc, report.best_f1

    rows: dict[str, dict] = {}
    point_metrics = metrics(bundle.anomaly)
    seq_metrics = metrics(bundle.seq_anomaly)
    rows["point"] = {"auc": [point_metrics[0]] * len(d_values),
                     "best_f1": [point_metrics[1]] * len(d_values)}
    rows["sequence"] = {"auc": [seq_metrics[0]] * len(d_values),
                        "best_f1": [seq_metrics[1]] * len(d_values)}

    gated = {
        "hard_theta_inf": None,
        "hard_theta_pct": GateConfig(kind="hard", theta_n=theta, d=0),
        "soft_theta_pct": GateConfig(kind="soft", theta_n=theta, d=0),
    }
    for name, base in gated.items():
        aucs, f1s = [], []
        for d in d_values:
            if base is None:
                induced = smoothed_score(bundle.anomaly, d)
            else:
                induced = induced_anomaly_score(
                    bundle.anomaly,
                    bundle.nominality,
                    GateConfig(kind=base.kind, theta_n=base.theta_n, d=d),
                )
            auc_val, f1_val = metrics(induced)
            aucs.append(auc_val)
            f1s.append(f1_val)
        rows[name] = {"auc": aucs, "best_f1": f1s}

    for row in rows.values():
        for metric in ("auc", "best_f1"):
            vals = np.asarray(row[metric])
            if (vals == vals[0]).all():  # exact zero spread for d-independent rows
                row[f"{metric}_mean"] = float(vals[0])
                row[f"{metric}_std"] = 0.0
            else:
                row[f"{metric}_mean"] = float(vals.mean())
                row[f"{metric}_std"] = float(vals.std())

    return {"d_values": d_values, "theta": theta, "rows": rows}
