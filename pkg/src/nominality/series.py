"""Multivariate time series data model and preprocessing.

A series is a T x D matrix of float64 values (rows are time points, columns
are channels) with an optional 0/1 label per row.  All containers are frozen
and their arrays are marked read-only, so instances can be shared freely
across threads; every operation here returns a new object.

``time_origin`` tracks the index of the first row inside the un-trimmed
source series, so labels and scores can be re-aligned after boundary
trimming without the caller doing offset bookkeeping.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, LabelError, ParseError, ShapeError

SCORE_KINDS = ("anomaly", "nominality", "induced")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LabeledSeries:
    """Observed multivariate series with optional ground-truth labels.

    Attributes:
        values: (T, D) float64 matrix, one row per time point.
        labels: optional (T,) vector of 0/1 ints.
        channel_names: optional list of D channel names.
        time_origin: index of row 0 in the un-trimmed source series.
    """

    values: np.ndarray
    labels: np.ndarray | None = None
    channel_names: tuple[str, ...] | None = None
    time_origin: int = 0

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeError(f"values must be 2-D (T, D), got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise EmptyInput(f"series needs T >= 1 and D >= 1, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ShapeError("series values must be finite after ingestion")
        object.__setattr__(self, "values", _freeze(values))
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (values.shape[0],):
                raise ShapeError(
                    f"labels must have shape ({values.shape[0]},), got {labels.shape}"
                )
            if not np.isin(labels, (0, 1)).all():
                raise LabelError("labels must contain only 0 or 1")
            object.__setattr__(self, "labels", _freeze(labels))
        if self.channel_names is not None:
            names = tuple(self.channel_names)
            if len(names) != values.shape[1]:
                raise ShapeError(
                    f"expected {values.shape[1]} channel names, got {len(names)}"
                )
            object.__setattr__(self, "channel_names", names)

    @property
    def n_times(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> LabeledSeries:
        """Same labels/names/origin, new value matrix of identical length."""
        return LabeledSeries(values, self.labels, self.channel_names, self.time_origin)


@dataclass(frozen=True)
class PreprocessSpec:
    """How raw data is reduced before model training.

    ``window_len`` is the length used when extracting training windows
    (W for the point model, 2*gamma for the sequence model); min-max
    statistics are always fit on the training split and reused verbatim
    on the test split.
    """

    downsample_factor: int = 1
    normalize: bool = True
    stride: int = 1
    window_len: int = 1

    def __post_init__(self) -> None:
        if self.downsample_factor < 1:
            raise ShapeError("downsample_factor must be >= 1")
        if self.stride < 1:
            raise ShapeError("stride must be >= 1")
        if self.window_len < 1:
            raise ShapeError("window_len must be >= 1")


@dataclass(frozen=True)
class ScoreSeries:
    """Per-time-point real-valued scores sharing the series time index.

    ``kind`` is one of "anomaly", "nominality" or "induced"; nominality
    scores are validated to be non-negative and finite.
    """

    scores: np.ndarray
    kind: str = "anomaly"
    time_origin: int = 0

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1:
            raise ShapeError(f"scores must be 1-D, got shape {scores.shape}")
        if self.kind not in SCORE_KINDS:
            raise ShapeError(f"kind must be one of {SCORE_KINDS}, got {self.kind!r}")
        if self.kind == "nominality":
            if not np.isfinite(scores).all() or (scores < 0).any():
                raise ShapeError("nominality scores must be finite and >= 0")
        object.__setattr__(self, "scores", _freeze(scores))

    def __len__(self) -> int:
        return self.scores.shape[0]


@dataclass(frozen=True)
class MinMaxStats:
    """Per-channel (min, max) pairs fitted on a training split."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self) -> None:
        mins = _freeze(np.asarray(self.mins, dtype=np.float64))
        maxs = _freeze(np.asarray(self.maxs, dtype=np.float64))
        if mins.shape != maxs.shape or mins.ndim != 1:
            raise ShapeError("mins and maxs must be 1-D arrays of equal length")
        if (mins > maxs).any():
            raise ShapeError("per-channel min must not exceed max")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def n_channels(self) -> int:
        return self.mins.shape[0]

    @property
    def constant_mask(self) -> np.ndarray:
        """True for channels whose training values were all identical."""
        return self.mins == self.maxs


def _parse_cell(cell: str, row_idx: int, col_idx: int) -> float:
    text = cell.strip()
    if text == "" or text.lower() == "nan":
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise ParseError(
            f"row {row_idx}: cannot parse {cell!r} in column {col_idx} as a number",
            row=row_idx,
        ) from None


def _parse_label(cell: str, row_idx: int) -> int:
    text = cell.strip()
    try:
        value = float(text)
    except ValueError:
        raise LabelError(f"row {row_idx}: label {cell!r} is not 0 or 1") from None
    if value not in (0.0, 1.0):
        raise LabelError(f"row {row_idx}: label {cell!r} is not 0 or 1")
    return int(value)


def load_csv(
    path: str,
    label_column: str | None = None,
    has_header: bool = True,
) -> LabeledSeries:
    """Read a comma-separated series file into a :class:`LabeledSeries`.

    Empty cells and literal ``nan`` entries are forward-filled per channel;
    a NaN with no predecessor becomes 0.  The label column, when named, is
    excluded from the value matrix and must contain only 0/1.

    Raises:
        EmptyInput: the file holds no data rows.
        ParseError: a row has the wrong width or a cell is not numeric.
        LabelError: a label value is not 0 or 1, or the column is missing.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise EmptyInput(f"{path}: file contains no rows")

    header: list[str] | None = None
    if has_header:
        header = [name.strip() for name in rows[0]]
        rows = rows[1:]
        if not rows:
            raise EmptyInput(f"{path}: file contains a header but no data rows")

    width = len(header) if header is not None else len(rows[0])
    label_idx: int | None = None
    if label_column is not None:
        if header is None:
            raise LabelError("label_column requires a header row")
        if label_column not in header:
            raise LabelError(f"label column {label_column!r} not found in header")
        label_idx = header.index(label_column)

    values = np.empty((len(rows), width - (1 if label_idx is not None else 0)))
    labels = np.empty(len(rows), dtype=np.int64) if label_idx is not None else None
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(
                f"row {i}: expected {width} fields, got {len(row)}", row=i
            )
        j = 0
        for col, cell in enumerate(row):
            if col == label_idx:
                labels[i] = _parse_label(cell, i)
            else:
                values[i, j] = _parse_cell(cell, i, col)
                j += 1

    # Forward-fill NaNs per channel; a NaN in the first row becomes 0.
    for j in range(values.shape[1]):
        col = values[:, j]
        nan_mask = np.isnan(col)
        if not nan_mask.any():
            continue
        last = 0.0
        for i in range(col.shape[0]):
            if nan_mask[i]:
                col[i] = last
            else:
                last = col[i]

    names = None
    if header is not None:
        names = tuple(n for k, n in enumerate(header) if k != label_idx)
    return LabeledSeries(values, labels, names, time_origin=0)


def save_csv(series: LabeledSeries, path: str, label_column: str = "label") -> None:
    """Write a series back out with the same conventions ``load_csv`` reads."""
    names = series.channel_names or tuple(
        f"c{j}" for j in range(series.n_channels)
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if series.labels is not None:
            writer.writerow(list(names) + [label_column])
            for row, label in zip(series.values, series.labels):
                writer.writerow([repr(float(v)) for v in row] + [int(label)])
        else:
            writer.writerow(list(names))
            for row in series.values:
                writer.writerow([repr(float(v)) for v in row])


def minmax_fit(train: LabeledSeries) -> MinMaxStats:
    """Fit per-channel (min, max) pairs on the training split."""
    return MinMaxStats(train.values.min(axis=0), train.values.max(axis=0))


def minmax_apply(series: LabeledSeries, stats: MinMaxStats) -> LabeledSeries:
    """Map each channel through (x - min) / (max - min).

    Constant channels map to 0.  Values outside the fitted range are NOT
    clipped, so out-of-range test points stay visible to the models.
    """
    if stats.n_channels != series.n_channels:
        raise ShapeError(
            f"stats cover {stats.n_channels} channels, series has {series.n_channels}"
        )
    span = stats.maxs - stats.mins
    safe_span = np.where(span == 0.0, 1.0, span)
    out = (series.values - stats.mins) / safe_span
    out[:, stats.constant_mask] = 0.0
    return series.with_values(out)


def minmax_invert(series: LabeledSeries, stats: MinMaxStats) -> LabeledSeries:
    """Undo :func:`minmax_apply`; constant channels recover their fitted value."""
    if stats.n_channels != series.n_channels:
        raise ShapeError(
            f"stats cover {stats.n_channels} channels, series has {series.n_channels}"
        )
    span = stats.maxs - stats.mins
    out = series.values * span + stats.mins
    out[:, stats.constant_mask] = stats.mins[stats.constant_mask]
    return series.with_values(out)


def downsample(series: LabeledSeries, factor: int) -> LabeledSeries:
    """Aggregate consecutive blocks of ``factor`` rows.

    Values take the block mean; a block's label is 1 if any row in the
    block is anomalous, so short anomalies survive downsampling.  A
    trailing partial block is kept and aggregated.
    """
    if factor < 1:
        raise ShapeError("downsample factor must be >= 1")
    if factor == 1:
        return series
    starts = np.arange(0, series.n_times, factor)
    counts = np.diff(np.append(starts, series.n_times)).astype(np.float64)
    sums = np.add.reduceat(series.values, starts, axis=0)
    values = sums / counts[:, None]
    labels = None
    if series.labels is not None:
        labels = np.maximum.reduceat(series.labels, starts)
    return LabeledSeries(values, labels, series.channel_names, series.time_origin)


def extract_windows(
    series: LabeledSeries, window_len: int, stride: int
) -> tuple[np.ndarray, np.ndarray]:
    """Slice the series into windows covering every time point.

    Windows start at 0, stride, 2*stride, ...; if that grid misses the tail,
    one final window anchored at T - window_len is appended so the union of
    windows is exactly [0, T).

    Returns:
        (windows, starts): windows has shape (n, window_len, D) and starts
        holds the source index of each window's first row.
    """
    if window_len > series.n_times:
        raise ShapeError(
            f"window_len {window_len} exceeds series length {series.n_times}"
        )
    if stride < 1:
        raise ShapeError("stride must be >= 1")
    last = series.n_times - window_len
    starts = list(range(0, last + 1, stride))
    if starts[-1] != last:
        starts.append(last)
    windows = np.stack([series.values[s : s + window_len] for s in starts])
    return windows, np.asarray(starts, dtype=np.int64)
