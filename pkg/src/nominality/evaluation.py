"""Threshold-sweep evaluation: best F1, point-adjusted best F1, ROC-AUC.

A point is predicted anomalous when its score is >= the threshold, and the
sweep visits every distinct score plus one sentinel above the maximum (the
all-negative prediction), which is sufficient because the F1 score only
changes at observed values.  Ties in the best F1 are broken toward the
smallest threshold.

Each metric has a deliberately simple brute-force twin
(``*_bruteforce`` / :func:`auc_trapezoid`) used as an independent oracle in
the test suite; the fast paths must match them exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels, ShapeError
from .series import ScoreSeries


@dataclass
class EvalReport:
    """Threshold-sweep results for one score series.

    ``curve`` is an (n, 4) array with columns (threshold, precision, recall,
    f1), sorted by threshold; ``pa_best_f1`` and ``spiked_pa_best_f1`` are
    filled only when requested.
    """

    best_f1: float
    best_threshold: float
    precision: float
    recall: float
    auc: float
    curve: np.ndarray
    pa_best_f1: float | None = None
    spiked_pa_best_f1: float | None = None

    def to_dict(self) -> dict:
        doc = {
            "best_f1": self.best_f1,
            "best_threshold": self.best_threshold,
            "precision": self.precision,
            "recall": self.recall,
            "auc": self.auc,
            "curve": [list(row) for row in self.curve],
        }
        if self.pa_best_f1 is not None:
            doc["pa_best_f1"] = self.pa_best_f1
        if self.spiked_pa_best_f1 is not None:
            doc["spiked_pa_best_f1"] = self.spiked_pa_best_f1
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _as_arrays(
    scores: ScoreSeries | np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    score_vals = scores.scores if isinstance(scores, ScoreSeries) else np.asarray(scores, dtype=np.float64)
    label_vals = np.asarray(labels)
    if score_vals.shape != label_vals.shape:
        raise ShapeError(
            f"scores and labels lengths differ: {score_vals.shape} vs {label_vals.shape}"
        )
    return score_vals, label_vals.astype(np.int64)


def _require_both_classes(labels: np.ndarray) -> None:
    if labels.min() == labels.max():
        raise DegenerateLabels("labels must contain at least one 0 and one 1")


def confusion(pred: np.ndarray, labels: np.ndarray) -> tuple[int, int, int, int]:
    """Counts (TP, FP, FN, TN) for binary predictions against binary labels."""
    pred = np.asarray(pred)
    labels = np.asarray(labels)
    if pred.shape != labels.shape:
        raise ShapeError(f"pred and labels lengths differ: {pred.shape} vs {labels.shape}")
    pred = pred.astype(bool)
    truth = labels.astype(bool)
    tp = int((pred & truth).sum())
    fp = int((pred & ~truth).sum())
    fn = int((~pred & truth).sum())
    tn = int((~pred & ~truth).sum())
    return tp, fp, fn, tn


def _f1_from_counts(tp: np.ndarray, fp: np.ndarray, fn: np.ndarray):
    """Precision, recall and their harmonic mean; all 0 when TP is 0."""
    tp = np.asarray(tp, dtype=np.float64)
    fp = np.asarray(fp, dtype=np.float64)
    fn = np.asarray(fn, dtype=np.float64)
    pred_pos = tp + fp
    precision = np.divide(tp, pred_pos, out=np.zeros_like(tp), where=pred_pos > 0)
    actual_pos = tp + fn
    recall = np.divide(tp, actual_pos, out=np.zeros_like(tp), where=actual_pos > 0)
    denom = precision + recall
    f1 = np.divide(
        2.0 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0
    )
    return precision, recall, f1


def _threshold_grid(score_vals: np.ndarray) -> np.ndarray:
    """Distinct scores ascending, plus a sentinel strictly above the maximum."""
    uniq = np.unique(score_vals)
    top = uniq[-1] + 1.0
    if top == uniq[-1]:  # +1 fell below one ulp of a huge score
        top = np.inf
    return np.append(uniq, top)


def best_f1(scores: ScoreSeries | np.ndarray, labels: np.ndarray) -> EvalReport:
    """Exhaustive threshold sweep; returns the report with the maximal F1.

    Raises:
        DegenerateLabels: labels are all 0 or all 1.
    """
    score_vals, label_vals = _as_arrays(scores, labels)
    _require_both_classes(label_vals)

    thresholds = _threshold_grid(score_vals)
    order = np.argsort(score_vals, kind="stable")
    sorted_scores = score_vals[order]
    sorted_labels = label_vals[order]
    total_pos = int(sorted_labels.sum())
    # positives strictly below each threshold; predictions are score >= theta
    pos_below = np.concatenate([[0], np.cumsum(sorted_labels)])
    cut = np.searchsorted(sorted_scores, thresholds, side="left")
    tp = total_pos - pos_below[cut]
    pred_pos = score_vals.shape[0] - cut
    fp = pred_pos - tp
    fn = total_pos - tp
    precision, recall, f1 = _f1_from_counts(tp, fp, fn)

    best_idx = int(np.argmax(f1))  # first occurrence = smallest threshold
    curve = np.column_stack([thresholds, precision, recall, f1])
    return EvalReport(
        best_f1=float(f1[best_idx]),
        best_threshold=float(thresholds[best_idx]),
        precision=float(precision[best_idx]),
        recall=float(recall[best_idx]),
        auc=auc(score_vals, label_vals),
        curve=curve,
    )


def best_f1_bruteforce(
    scores: ScoreSeries | np.ndarray, labels: np.ndarray
) -> tuple[float, float]:
    """Independent oracle: evaluate F1 at every threshold with explicit loops."""
    score_vals, label_vals = _as_arrays(scores, labels)
    _require_both_classes(label_vals)
    best, best_theta = -1.0, 0.0
    for theta in _threshold_grid(score_vals):
        tp, fp, fn, _ = confusion(score_vals >= theta, label_vals)
        _, _, f1 = _f1_from_counts(tp, fp, fn)
        if float(f1) > best:
            best, best_theta = float(f1), float(theta)
    return best, best_theta


def point_adjust(pred: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Expand detections to whole ground-truth runs.

    For each maximal contiguous run of label 1, if any prediction inside the
    run is 1, the entire run becomes 1 in the adjusted prediction.
    Predictions outside true runs are unchanged.
    """
    pred = np.asarray(pred).astype(np.int64)
    labels = np.asarray(labels).astype(np.int64)
    if pred.shape != labels.shape:
        raise ShapeError(f"pred and labels lengths differ: {pred.shape} vs {labels.shape}")
    adjusted = pred.copy()
    for start, stop in _label_runs(labels):
        if adjusted[start:stop].any():
            adjusted[start:stop] = 1
    return adjusted


def _label_runs(labels: np.ndarray) -> list[tuple[int, int]]:
    """Half-open (start, stop) bounds of each maximal run of 1s."""
    diff = np.diff(np.concatenate([[0], labels, [0]]))
    starts = np.flatnonzero(diff == 1)
    stops = np.flatnonzero(diff == -1)
    return list(zip(starts.tolist(), stops.tolist()))


def pa_best_f1(scores: ScoreSeries | np.ndarray, labels: np.ndarray) -> float:
    """Best F1 over the same threshold sweep, scored after point-adjustment.

    Adjustment turns a run into all-TP as soon as its maximal score clears
    the threshold and leaves false positives untouched, which is what the
    run-based counting below computes directly.
    """
    score_vals, label_vals = _as_arrays(scores, labels)
    _require_both_classes(label_vals)
    runs = _label_runs(label_vals)
    run_max = np.asarray([score_vals[s:e].max() for s, e in runs])
    run_len = np.asarray([e - s for s, e in runs], dtype=np.int64)

    order = np.argsort(run_max, kind="stable")
    run_max_sorted = run_max[order]
    len_after = np.concatenate(
        [np.cumsum(run_len[order][::-1])[::-1], [0]]
    )  # run lengths with max >= position
    neg_sorted = np.sort(score_vals[label_vals == 0])

    thresholds = _threshold_grid(score_vals)
    tp = len_after[np.searchsorted(run_max_sorted, thresholds, side="left")]
    fp = neg_sorted.shape[0] - np.searchsorted(neg_sorted, thresholds, side="left")
    fn = int(run_len.sum()) - tp
    _, _, f1 = _f1_from_counts(tp, fp, fn)
    return float(f1.max())


def pa_best_f1_bruteforce(
    scores: ScoreSeries | np.ndarray, labels: np.ndarray
) -> float:
    """Independent oracle: point-adjust the predictions at every threshold."""
    score_vals, label_vals = _as_arrays(scores, labels)
    _require_both_classes(label_vals)
    best = -1.0
    for theta in _threshold_grid(score_vals):
        adjusted = point_adjust(score_vals >= theta, label_vals)
        tp, fp, fn, _ = confusion(adjusted, label_vals)
        _, _, f1 = _f1_from_counts(tp, fp, fn)
        best = max(best, float(f1))
    return best


def auc(scores: ScoreSeries | np.ndarray, labels: np.ndarray) -> float:
    """ROC-AUC via the rank statistic; tied scores contribute half credit."""
    score_vals, label_vals = _as_arrays(scores, labels)
    _require_both_classes(label_vals)
    ranks = _average_ranks(score_vals)
    n_pos = int(label_vals.sum())
    n_neg = label_vals.shape[0] - n_pos
    u_stat = ranks[label_vals == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_stat / (n_pos * n_neg))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    boundaries = np.concatenate(
        [[0], np.flatnonzero(sorted_vals[1:] != sorted_vals[:-1]) + 1, [values.shape[0]]]
    )
    ranks = np.empty(values.shape[0])
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        ranks[order[lo:hi]] = (lo + hi + 1) / 2.0  # average of 1-based lo+1 .. hi
    return ranks


def auc_trapezoid(scores: ScoreSeries | np.ndarray, labels: np.ndarray) -> float:
    """Independent oracle: trapezoidal integration of the ROC curve."""
    score_vals, label_vals = _as_arrays(scores, labels)
    _require_both_classes(label_vals)
    n_pos = int(label_vals.sum())
    n_neg = label_vals.shape[0] - n_pos
    fpr = [0.0]
    tpr = [0.0]
    for theta in np.unique(score_vals)[::-1]:
        pred = score_vals >= theta
        tp, fp, _, _ = confusion(pred, label_vals)
        fpr.append(fp / n_neg)
        tpr.append(tp / n_pos)
    area = 0.0
    for i in range(1, len(fpr)):
        area += (fpr[i] - fpr[i - 1]) * (tpr[i] + tpr[i - 1]) / 2.0
    return area


def spike_augment(scores: ScoreSeries, interval: int) -> ScoreSeries:
    """Replace every interval-th score with the largest finite value.

    Guarantees at least one detection per run of length >= interval under
    point-adjustment; the spike magnitude stays finite so sorting remains
    well defined.
    """
    if interval < 1:
        raise ShapeError("spike interval must be >= 1")
    values = scores.scores.copy()
    values[::interval] = np.finfo(np.float64).max
    return ScoreSeries(values, scores.kind, scores.time_origin)


def evaluate(
    scores: ScoreSeries | np.ndarray,
    labels: np.ndarray,
    point_adjusted: bool = False,
    spike_interval: int | None = None,
) -> EvalReport:
    """Full report: threshold sweep, AUC, optional point-adjusted variants."""
    report = best_f1(scores, labels)
    if point_adjusted:
        report.pa_best_f1 = pa_best_f1(scores, labels)
    if spike_interval is not None:
        series = scores if isinstance(scores, ScoreSeries) else ScoreSeries(scores)
        spiked = spike_augment(series, spike_interval)
        report.spiked_pa_best_f1 = pa_best_f1(spiked, labels)
    return report
