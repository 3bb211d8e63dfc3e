"""Nominality-gated anomaly scoring for multivariate time series.

The package pairs a point-wise reconstructor (which flags individual
out-of-distribution readings) with a sequence reconstructor (which predicts
each stretch of points from its surroundings and therefore reacts to broken
temporal structure).  Comparing the two reconstructions yields a per-point
nominality score; gating the point-based anomaly score with it produces an
induced score that propagates evidence across anomalous stretches without
flooding normal neighborhoods.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DataError,
    DegenerateLabels,
    EmptyInput,
    LabelError,
    NominalityError,
    NumericError,
    ParseError,
    ShapeError,
    SingularSystem,
    SpecError,
    TrainingDiverged,
)
from .evaluation import (
    EvalReport,
    auc,
    best_f1,
    confusion,
    evaluate,
    pa_best_f1,
    point_adjust,
    spike_augment,
)
from .reconstructors import (
    PointHyperparams,
    PointModel,
    ReconstructionPair,
    SequenceModel,
    load_model,
    make_pair,
    reconstruct_points,
    reconstruct_sequence,
    save_model,
    train_point_model,
    train_sequence_model,
)
from .scoring import (
    GateConfig,
    anomaly_score,
    gate,
    induced_anomaly_score,
    nominality_score,
    resolve_theta,
    sequence_anomaly_score,
    smoothed_score,
    theta_from_percentile,
)
from .series import (
    LabeledSeries,
    MinMaxStats,
    PreprocessSpec,
    ScoreSeries,
    downsample,
    extract_windows,
    load_csv,
    minmax_apply,
    minmax_fit,
    minmax_invert,
    save_csv,
)
from .synthetic import (
    SensorSpec,
    ToySpec,
    TrigSpec,
    f_reference_sample,
    gen_sensor,
    gen_toy,
    gen_trig,
    ks_critical_value,
    ks_statistic,
    trig_preset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
