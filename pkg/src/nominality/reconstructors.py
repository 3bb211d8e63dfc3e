"""Point-based and sequence-based reconstruction models.

The point model is a one-hidden-layer tanh autoencoder trained row by row
with mini-batch gradient descent (optionally Adam), so its output at time t
depends only on the input at time t.  The sequence model is a closed-form
ridge regression that predicts the middle ``delta`` points of a window from
the ``gamma`` points on each side, which forces it to learn time-dependent
structure.  Because the sequence model cannot reconstruct the first and last
``gamma`` points, :func:`make_pair` trims the point reconstruction to the
same interior range so every covered time point has exactly two
reconstructed values.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ShapeError, SingularSystem, TrainingDiverged
from .series import LabeledSeries

OPTIMIZERS = ("sgd", "adam")
MODEL_FORMAT = "nominality-model-v1"


@dataclass(frozen=True)
class PointHyperparams:
    """Training settings for the point autoencoder."""

    latent_dim: int = 10
    learn_rate: float = 1e-4
    epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    optimizer: str = "sgd"

    def __post_init__(self) -> None:
        if self.latent_dim < 1:
            raise ShapeError("latent_dim must be >= 1")
        if self.learn_rate <= 0:
            raise ShapeError("learn_rate must be > 0")
        if self.epochs < 0:
            raise ShapeError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ShapeError("batch_size must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ShapeError(f"optimizer must be one of {OPTIMIZERS}")


@dataclass
class PointModel:
    """tanh autoencoder reconstructing each time point independently.

    The latent dimension is a compression bottleneck (latent_dim <= D);
    weights live in plain float64 arrays so reconstruction and persistence
    are exactly reproducible.
    """

    enc_w: np.ndarray
    enc_b: np.ndarray
    dec_w: np.ndarray
    dec_b: np.ndarray
    hp: PointHyperparams
    first_epoch_loss: float | None = None
    final_epoch_loss: float | None = None

    @property
    def n_channels(self) -> int:
        return self.enc_w.shape[0]

    def reconstruct(self, rows: np.ndarray) -> np.ndarray:
        """Reconstruct a (n, D) batch row by row."""
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.n_channels:
            raise ShapeError(
                f"expected (n, {self.n_channels}) input, got shape {rows.shape}"
            )
        hidden = np.tanh(rows @ self.enc_w + self.enc_b)
        return hidden @ self.dec_w + self.dec_b

    def loss_and_grads(
        self, batch: np.ndarray
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean squared reconstruction error of a batch and its gradients.

        The loss is averaged over all batch elements (rows times channels).
        Gradients are exact; the finite-difference check in the test suite
        validates them against central differences.
        """
        batch = np.asarray(batch, dtype=np.float64)
        n, dim = batch.shape
        pre = batch @ self.enc_w + self.enc_b
        hidden = np.tanh(pre)
        recon = hidden @ self.dec_w + self.dec_b
        resid = recon - batch
        loss = float((resid**2).mean())
        d_recon = 2.0 * resid / (n * dim)
        d_dec_w = hidden.T @ d_recon
        d_dec_b = d_recon.sum(axis=0)
        d_hidden = d_recon @ self.dec_w.T
        d_pre = d_hidden * (1.0 - hidden**2)
        d_enc_w = batch.T @ d_pre
        d_enc_b = d_pre.sum(axis=0)
        return loss, {
            "enc_w": d_enc_w,
            "enc_b": d_enc_b,
            "dec_w": d_dec_w,
            "dec_b": d_dec_b,
        }


def _init_point_model(n_channels: int, hp: PointHyperparams) -> PointModel:
    rng = np.random.default_rng(hp.seed)
    enc_bound = 1.0 / np.sqrt(n_channels)
    dec_bound = 1.0 / np.sqrt(hp.latent_dim)
    return PointModel(
        enc_w=rng.uniform(-enc_bound, enc_bound, (n_channels, hp.latent_dim)),
        enc_b=rng.uniform(-enc_bound, enc_bound, hp.latent_dim),
        dec_w=rng.uniform(-dec_bound, dec_bound, (hp.latent_dim, n_channels)),
        dec_b=rng.uniform(-dec_bound, dec_bound, n_channels),
        hp=hp,
    )


def train_point_model(train: LabeledSeries, hp: PointHyperparams) -> PointModel:
    """Fit the point autoencoder on the rows of the training series.

    Training is plain mini-batch gradient descent (or Adam when configured)
    with seeded shuffling, so identical inputs and seeds give bitwise
    identical models.

    Raises:
        ShapeError: fewer than 2 channels, latent wider than the input, or
            fewer rows than one batch.
        TrainingDiverged: the epoch loss became non-finite.
    """
    if train.n_channels < 2:
        raise ShapeError(
            "point model requires at least 2 channels; univariate input "
            "carries no cross-channel structure to reconstruct"
        )
    if hp.latent_dim > train.n_channels:
        raise ShapeError(
            f"latent_dim {hp.latent_dim} exceeds channel count {train.n_channels}"
        )
    if train.n_times < hp.batch_size:
        raise ShapeError(
            f"need at least batch_size={hp.batch_size} rows, got {train.n_times}"
        )
    model = _init_point_model(train.n_channels, hp)
    rows = train.values
    rng = np.random.default_rng(hp.seed + 1)
    params = {
        "enc_w": model.enc_w,
        "enc_b": model.enc_b,
        "dec_w": model.dec_w,
        "dec_b": model.dec_b,
    }
    adam_m = {k: np.zeros_like(v) for k, v in params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in params.items()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    for epoch in range(hp.epochs):
        order = rng.permutation(rows.shape[0])
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, rows.shape[0], hp.batch_size):
            batch = rows[order[start : start + hp.batch_size]]
            loss, grads = model.loss_and_grads(batch)
            epoch_loss += loss
            n_batches += 1
            step += 1
            if hp.optimizer == "adam":
                for key, grad in grads.items():
                    adam_m[key] = beta1 * adam_m[key] + (1 - beta1) * grad
                    adam_v[key] = beta2 * adam_v[key] + (1 - beta2) * grad**2
                    m_hat = adam_m[key] / (1 - beta1**step)
                    v_hat = adam_v[key] / (1 - beta2**step)
                    params[key] -= hp.learn_rate * m_hat / (np.sqrt(v_hat) + eps)
            else:
                for key, grad in grads.items():
                    params[key] -= hp.learn_rate * grad
        epoch_loss /= n_batches
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(
                f"training loss became non-finite at epoch {epoch}", epoch=epoch
            )
        if epoch == 0:
            model.first_epoch_loss = epoch_loss
        model.final_epoch_loss = epoch_loss
    # The epoch loss is computed before each update, so the very last update
    # could still blow up without being seen; keep the finite-weights promise.
    if any(not np.isfinite(p).all() for p in params.values()):
        raise TrainingDiverged(
            f"weights became non-finite at epoch {hp.epochs - 1}", epoch=hp.epochs - 1
        )
    return model


def reconstruct_points(
    model: PointModel, series: LabeledSeries | np.ndarray
) -> np.ndarray:
    """Point-wise reconstruction of a whole series; row t depends only on row t."""
    values = series.values if isinstance(series, LabeledSeries) else series
    return model.reconstruct(values)


@dataclass
class SequenceModel:
    """Closed-form ridge predictor of the middle delta points from 2*gamma context.

    ``weights`` has one row per context feature (the gamma points before the
    block and the gamma points after, flattened time-major) plus a trailing
    bias row; columns are the flattened delta target points.  The bias row is
    not penalized, so in the large-lambda limit predictions collapse to the
    target column means.
    """

    gamma: int
    delta: int
    ridge_lambda: float
    weights: np.ndarray
    n_channels: int
    fit_residual: float = 0.0

    @property
    def context_len(self) -> int:
        return 2 * self.gamma

    def _design_rows(self, values: np.ndarray, starts: np.ndarray) -> np.ndarray:
        g, d = self.gamma, self.delta
        rows = np.empty((starts.shape[0], self.weights.shape[0]))
        for i, s in enumerate(starts):
            before = values[s - g : s].ravel()
            after = values[s + d : s + d + g].ravel()
            rows[i, :-1] = np.concatenate([before, after])
            rows[i, -1] = 1.0
        return rows

    def predict_blocks(self, values: np.ndarray, starts: np.ndarray) -> np.ndarray:
        """Predict the delta-blocks starting at ``starts``; shape (n, delta, D)."""
        design = self._design_rows(values, starts)
        flat = design @ self.weights
        return flat.reshape(starts.shape[0], self.delta, self.n_channels)


def _block_grid(gamma: int, delta: int, n_times: int, stride: int) -> np.ndarray:
    """Valid target-block starts: a stride grid over [gamma, T - gamma - delta]."""
    last = n_times - gamma - delta
    starts = list(range(gamma, last + 1, stride))
    return np.asarray(starts, dtype=np.int64)


def train_sequence_model(
    train: LabeledSeries,
    gamma: int,
    delta: int,
    ridge_lambda: float,
    stride: int | None = None,
) -> SequenceModel:
    """Solve the context-to-middle ridge regression in closed form.

    Target blocks are sampled on a stride grid (default: stride = delta, so
    training targets do not overlap).  The normal equations are solved with a
    Cholesky factorization; the bias row is excluded from the penalty.

    Raises:
        ShapeError: series shorter than 2*gamma + delta or bad parameters.
        SingularSystem: the normal matrix is not positive definite (use
            ridge_lambda > 0).
    """
    if gamma < 1 or delta < 1:
        raise ShapeError("gamma and delta must be >= 1")
    if delta > 2 * gamma:
        raise ShapeError(f"delta {delta} exceeds context width 2*gamma = {2 * gamma}")
    if ridge_lambda < 0:
        raise ShapeError("ridge_lambda must be >= 0")
    if train.n_times < 2 * gamma + delta:
        raise ShapeError(
            f"series length {train.n_times} is shorter than 2*gamma + delta = "
            f"{2 * gamma + delta}"
        )
    if stride is None:
        stride = delta
    if stride < 1:
        raise ShapeError("stride must be >= 1")

    values = train.values
    dim = train.n_channels
    starts = _block_grid(gamma, delta, train.n_times, stride)
    n_features = 2 * gamma * dim + 1
    model = SequenceModel(gamma, delta, ridge_lambda, np.zeros((n_features, delta * dim)), dim)
    design = model._design_rows(values, starts)
    targets = np.stack([values[s : s + delta].ravel() for s in starts])

    gram = design.T @ design
    penalty = np.eye(n_features)
    penalty[-1, -1] = 0.0  # leave the bias unpenalized
    lhs = gram + ridge_lambda * penalty
    rhs = design.T @ targets
    try:
        factor = cho_factor(lhs)
    except LinAlgError as exc:
        raise SingularSystem(
            "normal matrix is singular; refit with ridge_lambda > 0"
        ) from exc
    # C-ordered so predictions are bitwise identical before and after a
    # save/load round trip (cho_solve hands back Fortran order).
    model.weights = np.ascontiguousarray(cho_solve(factor, rhs))
    model.fit_residual = float(np.abs(lhs @ model.weights - rhs).max())
    return model


def reconstruct_sequence(
    model: SequenceModel, series: LabeledSeries | np.ndarray
) -> np.ndarray:
    """Predict every interior time point exactly once.

    Delta-blocks tile [gamma, T - gamma) starting at gamma; if the grid does
    not land on the right edge, one final block anchored at T - gamma - delta
    is predicted last and overwrites the overlap, so each point keeps a
    single predicted value.

    Returns:
        (T - 2*gamma, D) matrix aligned at offset gamma.
    """
    values = series.values if isinstance(series, LabeledSeries) else np.asarray(series)
    n_times, dim = values.shape
    if dim != model.n_channels:
        raise ShapeError(f"expected {model.n_channels} channels, got {dim}")
    g, d = model.gamma, model.delta
    if n_times < 2 * g + d:
        raise ShapeError(
            f"series length {n_times} is shorter than 2*gamma + delta = {2 * g + d}"
        )
    starts = list(range(g, n_times - g - d + 1, d))
    if starts[-1] != n_times - g - d:
        starts.append(n_times - g - d)
    starts = np.asarray(starts, dtype=np.int64)
    blocks = model.predict_blocks(values, starts)
    out = np.empty((n_times - 2 * g, dim))
    for s, block in zip(starts, blocks):
        out[s - g : s - g + d] = block
    return out


@dataclass(frozen=True)
class ReconstructionPair:
    """Aligned point and sequence reconstructions over a common valid range.

    ``valid_range`` is the half-open interval of source indices covered;
    the first and last gamma points of the point reconstruction are
    discarded because the sequence model cannot produce them.
    """

    xc_hat: np.ndarray
    xstar_hat: np.ndarray
    valid_range: tuple[int, int]

    def __post_init__(self) -> None:
        if self.xc_hat.shape != self.xstar_hat.shape:
            raise ShapeError(
                f"reconstruction shapes differ: {self.xc_hat.shape} vs "
                f"{self.xstar_hat.shape}"
            )
        lo, hi = self.valid_range
        if hi - lo != self.xc_hat.shape[0]:
            raise ShapeError(
                f"valid_range {self.valid_range} does not span {self.xc_hat.shape[0]} rows"
            )


def make_pair(
    point_rec: np.ndarray, seq_rec: np.ndarray, gamma: int
) -> ReconstructionPair:
    """Trim the point reconstruction to the sequence model's valid interior."""
    point_rec = np.asarray(point_rec, dtype=np.float64)
    seq_rec = np.asarray(seq_rec, dtype=np.float64)
    if gamma < 0:
        raise ShapeError("gamma must be >= 0")
    n_times = point_rec.shape[0]
    if seq_rec.shape[0] != n_times - 2 * gamma or seq_rec.shape[1:] != point_rec.shape[1:]:
        raise ShapeError(
            f"sequence reconstruction shape {seq_rec.shape} does not match point "
            f"reconstruction {point_rec.shape} trimmed by gamma={gamma}"
        )
    trimmed = point_rec[gamma : n_times - gamma]
    return ReconstructionPair(trimmed, seq_rec, (gamma, n_times - gamma))


def _encode_array(arr: np.ndarray) -> dict:
    data = np.ascontiguousarray(arr, dtype="<f8")
    return {
        "dtype": "<f8",
        "shape": list(arr.shape),
        "data": base64.b64encode(data.tobytes()).decode("ascii"),
    }


def _decode_array(entry: dict) -> np.ndarray:
    raw = base64.b64decode(entry["data"])
    arr = np.frombuffer(raw, dtype=entry["dtype"]).astype(np.float64)
    return arr.reshape(entry["shape"])


def save_model(model: PointModel | SequenceModel, path: str) -> None:
    """Write a model as deterministic JSON (arrays as base64 row-major bytes).

    The file is self-describing (shapes, hyperparameters, seed) and the
    round-trip through :func:`load_model` is bit-exact.
    """
    if isinstance(model, PointModel):
        doc = {
            "format": MODEL_FORMAT,
            "kind": "point",
            "hyperparams": {
                "latent_dim": model.hp.latent_dim,
                "learn_rate": model.hp.learn_rate,
                "epochs": model.hp.epochs,
                "batch_size": model.hp.batch_size,
                "seed": model.hp.seed,
                "optimizer": model.hp.optimizer,
            },
            "first_epoch_loss": model.first_epoch_loss,
            "final_epoch_loss": model.final_epoch_loss,
            "arrays": {
                "enc_w": _encode_array(model.enc_w),
                "enc_b": _encode_array(model.enc_b),
                "dec_w": _encode_array(model.dec_w),
                "dec_b": _encode_array(model.dec_b),
            },
        }
    elif isinstance(model, SequenceModel):
        doc = {
            "format": MODEL_FORMAT,
            "kind": "sequence",
            "hyperparams": {
                "gamma": model.gamma,
                "delta": model.delta,
                "ridge_lambda": model.ridge_lambda,
                "n_channels": model.n_channels,
            },
            "fit_residual": model.fit_residual,
            "arrays": {"weights": _encode_array(model.weights)},
        }
    else:
        raise ShapeError(f"cannot save object of type {type(model).__name__}")
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path: str) -> PointModel | SequenceModel:
    """Read a model written by :func:`save_model`."""
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise ShapeError(f"{path}: not a {MODEL_FORMAT} file")
    if doc["kind"] == "point":
        return PointModel(
            enc_w=_decode_array(doc["arrays"]["enc_w"]),
            enc_b=_decode_array(doc["arrays"]["enc_b"]),
            dec_w=_decode_array(doc["arrays"]["dec_w"]),
            dec_b=_decode_array(doc["arrays"]["dec_b"]),
            hp=PointHyperparams(**doc["hyperparams"]),
            first_epoch_loss=doc["first_epoch_loss"],
            final_epoch_loss=doc["final_epoch_loss"],
        )
    if doc["kind"] == "sequence":
        hp = doc["hyperparams"]
        return SequenceModel(
            gamma=hp["gamma"],
            delta=hp["delta"],
            ridge_lambda=hp["ridge_lambda"],
            weights=_decode_array(doc["arrays"]["weights"]),
            n_channels=hp["n_channels"],
            fit_residual=doc["fit_residual"],
        )
    raise ShapeError(f"{path}: unknown model kind {doc['kind']!r}")
