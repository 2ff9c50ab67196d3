"""Multinomial logistic regression over bag-of-words features.

The time-aware variant appends one extra feature: the tweet timestamp
normalized to [0, 1] over the training range (clipped outside it). Training
is full-batch gradient descent on L2-regularized cross-entropy; the bias
column is not regularized. Single-threaded by design so accumulation order,
and therefore the fitted weights, are deterministic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import RoleLabel, TraceItem

LABEL_ORDER = (RoleLabel.LEFT_TROLL, RoleLabel.RIGHT_TROLL, RoleLabel.NEWS_FEED)


@dataclass(frozen=True)
class LRConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-4
    grad_tol: float = 1e-6
    seed: int = 0
    use_time: bool = False


@dataclass
class LRModel:
    weights: np.ndarray  # (num_classes, vocab_size [+ time] + bias)
    classes: tuple[RoleLabel, ...]
    vocab_size: int
    config: LRConfig
    time_range: Optional[tuple[int, int]] = None  # (t_min, t_max) from training

    @property
    def feature_dim(self) -> int:
        return self.vocab_size + (1 if self.config.use_time else 0) + 1


def featurize(item: TraceItem, vocab_size: int,
              time_range: Optional[tuple[int, int]] = None) -> tuple[np.ndarray, np.ndarray]:
    """Sparse (indices, values) for one tweet: token counts plus optional time.

    The time feature is (t - t_min) / (t_max - t_min), clipped to [0, 1] for
    timestamps outside the training range.
    """
    counts: dict[int, int] = {}
    for t in item.tokens:
        counts[t] = counts.get(t, 0) + 1
    idx = sorted(counts)
    vals = [float(counts[i]) for i in idx]
    if time_range is not None:
        t_min, t_max = time_range
        if not t_min < t_max:
            raise ValueError(f"degenerate time range {time_range}")
        z = (item.timestamp - t_min) / (t_max - t_min)
        idx.append(vocab_size)
        vals.append(min(1.0, max(0.0, z)))
    return np.array(idx, dtype=np.int64), np.array(vals, dtype=np.float64)


def featurize_batch(items: Sequence[TraceItem], vocab_size: int,
                    time_range: Optional[tuple[int, int]] = None) -> sp.csr_matrix:
    """CSR feature matrix with a trailing all-ones bias column."""
    dim = vocab_size + (1 if time_range is not None else 0) + 1
    rows, cols, vals = [], [], []
    for r, item in enumerate(items):
        idx, v = featurize(item, vocab_size, time_range)
        rows.extend([r] * (len(idx) + 1))
        cols.extend(idx.tolist() + [dim - 1])
        vals.extend(v.tolist() + [1.0])
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(items), dim))


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_gradient(weights: np.ndarray, X: sp.csr_matrix, y: np.ndarray,
                      l2: float) -> tuple[float, np.ndarray]:
    """Mean cross-entropy + 0.5*l2*||W||^2 (bias column excluded) and its gradient."""
    n = X.shape[0]
    probs = _softmax(X @ weights.T)
    nll = -np.log(np.maximum(probs[np.arange(n), y], 1e-300)).mean()
    reg_w = weights.copy()
    reg_w[:, -1] = 0.0  # bias unregularized
    loss = nll + 0.5 * l2 * float((reg_w * reg_w).sum())
    delta = probs
    delta[np.arange(n), y] -= 1.0
    grad = np.asarray((X.T @ delta).T) / n + l2 * reg_w
    return float(loss), grad


def train_lr(train_items: Sequence[TraceItem], vocab_size: int,
             config: LRConfig = LRConfig()) -> LRModel:
    """Fit by full-batch gradient descent until the epoch budget or tolerance."""
    labels = {it.label for it in train_items}
    if None in labels:
        raise ValueError("all training items need labels")
    if len(labels) < 2:
        raise ValueError("training set has a single class; nothing to separate")
    time_range = None
    if config.use_time:
        ts = [it.timestamp for it in train_items]
        time_range = (min(ts), max(ts))
        if time_range[0] == time_range[1]:
            raise ValueError("cannot normalize timestamps: all training times equal")
    X = featurize_batch(train_items, vocab_size, time_range)
    y = np.array([LABEL_ORDER.index(it.label) for it in train_items], dtype=np.int64)
    rng = np.random.default_rng(config.seed)
    weights = rng.normal(0.0, 0.01, size=(len(LABEL_ORDER), X.shape[1]))
    for _ in range(config.epochs):
        _, grad = loss_and_gradient(weights, X, y, config.l2)
        if float(np.sqrt((grad * grad).sum())) < config.grad_tol:
            break
        weights = weights - config.learning_rate * grad
    return LRModel(weights=weights, classes=LABEL_ORDER, vocab_size=vocab_size,
                   config=config, time_range=time_range)


def predict_scores(model: LRModel, items: Sequence[TraceItem]) -> np.ndarray:
    X = featurize_batch(items, model.vocab_size,
                        model.time_range if model.config.use_time else None)
    return np.asarray(X @ model.weights.T)


def predict_lr(model: LRModel, item: TraceItem) -> RoleLabel:
    """Argmax class score; score ties go to the first label in fixed order."""
    scores = predict_scores(model, [item])[0]
    return model.classes[int(np.argmax(scores))]


def predict_lr_batch(model: LRModel, items: Sequence[TraceItem]) -> list[RoleLabel]:
    scores = predict_scores(model, items)
    return [model.classes[int(i)] for i in np.argmax(scores, axis=1)]


_MODEL_MAGIC = b"TSLR"
_MODEL_VERSION = 1


def save_model(model: LRModel, path: str | Path) -> None:
    """Versioned header plus dense little-endian float64 weight dump."""
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<I", _MODEL_VERSION))
        fh.write(struct.pack("<QQB", model.weights.shape[0], model.weights.shape[1],
                             1 if model.config.use_time else 0))
        tr = model.time_range or (0, 0)
        fh.write(struct.pack("<qq", tr[0], tr[1]))
        fh.write(struct.pack("<Q", model.vocab_size))
        fh.write(struct.pack("<dIdd", model.config.learning_rate, model.config.epochs,
                             model.config.l2, model.config.grad_tol))
        fh.write(struct.pack("<q", model.config.seed))
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())


def load_model(path: str | Path) -> LRModel:
    raw = Path(path).read_bytes()
    if raw[:4] != _MODEL_MAGIC:
        raise ValueError(f"{path} is not a model file")
    version, = struct.unpack_from("<I", raw, 4)
    if version != _MODEL_VERSION:
        raise ValueError(f"unsupported model file version {version}")
    off = 8
    n_classes, dim, use_time = struct.unpack_from("<QQB", raw, off)
    off += 17
    t_min, t_max = struct.unpack_from("<qq", raw, off)
    off += 16
    vocab_size, = struct.unpack_from("<Q", raw, off)
    off += 8
    lr, epochs, l2, tol = struct.unpack_from("<dIdd", raw, off)
    off += struct.calcsize("<dIdd")
    seed, = struct.unpack_from("<q", raw, off)
    off += 8
    weights = np.frombuffer(raw, dtype="<f8", count=n_classes * dim,
                            offset=off).reshape(n_classes, dim).copy()
    config = LRConfig(learning_rate=lr, epochs=epochs, l2=l2, grad_tol=tol,
                      seed=seed, use_time=bool(use_time))
    return LRModel(weights=weights, classes=LABEL_ORDER, vocab_size=vocab_size,
                   config=config, time_range=(t_min, t_max) if use_time else None)
