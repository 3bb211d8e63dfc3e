"""Anomaly score, nominality score, gating, and the induced score.

The induced score at time t sums the gated contributions of all anomaly
scores within an induction window of +-d around t: each contribution A(t; tau)
is A(tau) multiplied by the product of gate values at every index strictly
between tau and t, plus the gate at t itself (the tau = t term is A(t)
unmodified).  Gates are non-increasing in the nominality score, so scores
propagate freely across point-anomalous stretches and are damped or blocked
when they would have to cross normal-looking points.

The optimized evaluation used here expands the window outward with running
products; ``induced_anomaly_score_naive`` keeps the literal double loop as
an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyInput, ShapeError
from .reconstructors import ReconstructionPair
from .series import ScoreSeries

GATE_KINDS = ("soft", "hard")

#: Added to the nominality denominator so a perfectly reconstructed point
#: (zero total deviation) yields a finite score.
NOMINALITY_EPSILON = 1e-12


@dataclass(frozen=True)
class GateConfig:
    """Gate kind, threshold source, and induction length.

    Exactly one of ``theta_n`` (explicit threshold) and ``percentile``
    (percentile of the training nominality scores, resolved later via
    :func:`resolve_theta`) must be set.  ``d = 0`` makes the induced score
    the anomaly score itself.
    """

    kind: str = "soft"
    theta_n: float | None = None
    percentile: float | None = None
    d: int = 0

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ShapeError(f"gate kind must be one of {GATE_KINDS}, got {self.kind!r}")
        if (self.theta_n is None) == (self.percentile is None):
            raise ShapeError("exactly one of theta_n and percentile must be set")
        if self.theta_n is not None and not self.theta_n > 0:
            raise ShapeError("theta_n must be > 0")
        if self.percentile is not None and not 0 < self.percentile <= 100:
            raise ShapeError("percentile must be in (0, 100]")
        if self.d < 0:
            raise ShapeError("induction length d must be >= 0")

    @property
    def resolved(self) -> bool:
        return self.theta_n is not None


def _aligned(pair: ReconstructionPair, observed: np.ndarray) -> np.ndarray:
    observed = np.asarray(observed, dtype=np.float64)
    if observed.shape != pair.xc_hat.shape:
        raise ShapeError(
            f"observed shape {observed.shape} does not match "
            f"reconstruction shape {pair.xc_hat.shape}"
        )
    return observed


def anomaly_score(pair: ReconstructionPair, observed: np.ndarray) -> ScoreSeries:
    """Squared L2 distance between the point reconstruction and the observation."""
    observed = _aligned(pair, observed)
    scores = ((pair.xc_hat - observed) ** 2).sum(axis=1)
    return ScoreSeries(scores, kind="anomaly", time_origin=pair.valid_range[0])


def sequence_anomaly_score(pair: ReconstructionPair, observed: np.ndarray) -> ScoreSeries:
    """Squared L2 distance between the sequence reconstruction and the observation."""
    observed = _aligned(pair, observed)
    scores = ((pair.xstar_hat - observed) ** 2).sum(axis=1)
    return ScoreSeries(scores, kind="anomaly", time_origin=pair.valid_range[0])


def nominality_score(
    pair: ReconstructionPair,
    observed: np.ndarray,
    epsilon: float = NOMINALITY_EPSILON,
) -> ScoreSeries:
    """Ratio of squared norms estimating how normal each time point is.

    The numerator distance (point vs sequence reconstruction) estimates the
    in-distribution part of the deviation; the denominator (observation vs
    sequence reconstruction) estimates the total deviation.  ``epsilon``
    guards the zero denominator.
    """
    observed = _aligned(pair, observed)
    num = ((pair.xc_hat - pair.xstar_hat) ** 2).sum(axis=1)
    den = ((observed - pair.xstar_hat) ** 2).sum(axis=1) + epsilon
    return ScoreSeries(num / den, kind="nominality", time_origin=pair.valid_range[0])


def gate(kind: str, theta_n: float, n):
    """Gate value in [0, 1], non-increasing in the nominality score ``n``.

    soft: max(0, 1 - n / theta_n); hard: 1 if n < theta_n else 0 (strict).
    Accepts scalars or arrays.
    """
    if kind not in GATE_KINDS:
        raise ShapeError(f"gate kind must be one of {GATE_KINDS}, got {kind!r}")
    if not theta_n > 0:
        raise ShapeError("theta_n must be > 0")
    n = np.asarray(n, dtype=np.float64)
    if kind == "soft":
        out = np.maximum(0.0, 1.0 - n / theta_n)
    else:
        out = (n < theta_n).astype(np.float64)
    return out if out.ndim else float(out)


def theta_from_percentile(train_nominality: ScoreSeries | np.ndarray, p: float) -> float:
    """Nearest-rank percentile of the training nominality scores.

    Returns the smallest observed value such that at least p% of the
    samples are <= it.
    """
    values = _scores_of(train_nominality)
    if values.size == 0:
        raise EmptyInput("cannot take a percentile of an empty score series")
    if not 0 < p <= 100:
        raise ShapeError("percentile must be in (0, 100]")
    ordered = np.sort(values)
    rank = int(np.ceil(p / 100.0 * ordered.size))
    return float(ordered[max(rank, 1) - 1])


def resolve_theta(
    cfg: GateConfig, train_nominality: ScoreSeries | np.ndarray
) -> GateConfig:
    """Turn a percentile-based gate config into one with an explicit threshold."""
    if cfg.resolved:
        return cfg
    theta = theta_from_percentile(train_nominality, cfg.percentile)
    return replace(cfg, theta_n=theta, percentile=None)


def _scores_of(series: ScoreSeries | np.ndarray) -> np.ndarray:
    if isinstance(series, ScoreSeries):
        return series.scores
    return np.asarray(series, dtype=np.float64)


def _induction_sum(a: np.ndarray, g: np.ndarray, d: int) -> np.ndarray:
    """Expand the induction window outward, carrying running gate products.

    For offset j, the contribution of tau = t - j is a[t-j] times the product
    of g over (t-j, t] and the contribution of tau = t + j is a[t+j] times
    the product over [t, t+j).  Products are accumulated in increasing-offset
    order with early exit once every chain has hit a zero gate.
    """
    out = a.copy()
    n = a.shape[0]
    if d == 0 or n == 1:
        return out
    left = np.ones_like(a)
    right = np.ones_like(a)
    for j in range(1, min(d, n - 1) + 1):
        left[j:] = left[j:] * g[1 : n - j + 1]
        right[: n - j] = right[: n - j] * g[j - 1 : n - 1]
        out[j:] += a[: n - j] * left[j:]
        out[: n - j] += a[j:] * right[: n - j]
        if not left[j:].any() and not right[: n - j].any():
            break
    return out


def induced_anomaly_score(
    a: ScoreSeries | np.ndarray,
    n: ScoreSeries | np.ndarray,
    cfg: GateConfig,
) -> ScoreSeries:
    """Sum gated anomaly-score contributions over a +-d window around each point."""
    a_vals = _scores_of(a)
    n_vals = _scores_of(n)
    if a_vals.shape != n_vals.shape:
        raise ShapeError(
            f"anomaly and nominality lengths differ: {a_vals.shape} vs {n_vals.shape}"
        )
    if not cfg.resolved:
        raise ShapeError("gate threshold is unresolved; call resolve_theta first")
    g = gate(cfg.kind, cfg.theta_n, n_vals)
    origin = a.time_origin if isinstance(a, ScoreSeries) else 0
    return ScoreSeries(_induction_sum(a_vals, g, cfg.d), "induced", origin)


def induced_anomaly_score_naive(
    a: ScoreSeries | np.ndarray,
    n: ScoreSeries | np.ndarray,
    cfg: GateConfig,
) -> ScoreSeries:
    """Literal double-loop evaluation of the induced score.

    Kept deliberately transparent as the independent cross-check for the
    optimized version; quadratic in d, so only suitable for short series.
    """
    a_vals = _scores_of(a)
    n_vals = _scores_of(n)
    if a_vals.shape != n_vals.shape:
        raise ShapeError(
            f"anomaly and nominality lengths differ: {a_vals.shape} vs {n_vals.shape}"
        )
    if not cfg.resolved:
        raise ShapeError("gate threshold is unresolved; call resolve_theta first")
    g = gate(cfg.kind, cfg.theta_n, n_vals)
    size = a_vals.shape[0]
    out = np.zeros(size)
    for t in range(size):
        total = 0.0
        for tau in range(max(0, t - cfg.d), min(size - 1, t + cfg.d) + 1):
            term = a_vals[tau]
            if tau < t:
                for k in range(tau + 1, t + 1):
                    term *= g[k]
            elif tau > t:
                for k in range(t, tau):
                    term *= g[k]
            total += term
        out[t] = total
    origin = a.time_origin if isinstance(a, ScoreSeries) else 0
    return ScoreSeries(out, "induced", origin)


def smoothed_score(a: ScoreSeries | np.ndarray, d: int) -> ScoreSeries:
    """Unnormalized moving sum of the anomaly score over [t-d, t+d].

    Equivalent to the induced score with a hard gate whose threshold exceeds
    every nominality value (all gates open); it shares the accumulation
    kernel so the equivalence is exact.
    """
    if d < 0:
        raise ShapeError("smoothing radius d must be >= 0")
    a_vals = _scores_of(a)
    origin = a.time_origin if isinstance(a, ScoreSeries) else 0
    ones = np.ones_like(a_vals)
    return ScoreSeries(_induction_sum(a_vals, ones, d), "induced", origin)
