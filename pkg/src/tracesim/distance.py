"""Pairwise distances between tokenized tweets.

Five base metrics (unit edit distance, semantic edit distance, its two
normalized variants, and bag-of-words cosine) plus the multiplicative
time-decay wrapper base * exp(theta * |dt| in days).

Scalar functions accept any hashable symbols and an arbitrary similarity
callable; the matrix path requires vocabulary-indexed TraceItems and a
CooccurrenceMatrix, and runs on the selected kernel backend.
"""

from __future__ import annotations

import concurrent.futures
import enum
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import _backend
from .cooccur import CooccurrenceMatrix, boundary_costs
from .corpus import TraceItem

SECONDS_PER_DAY = 86400.0
_FLOAT_MAX = sys.float_info.max

SimFn = Callable[[object, object], float]


class Metric(enum.Enum):
    ED = "ED"
    SED = "SED"
    SED_MAX = "SED/Max"
    SED_RATIO = "SED/ED"
    COSINE = "Cosine"


_SED_FAMILY = {Metric.SED, Metric.SED_MAX, Metric.SED_RATIO}


@dataclass(frozen=True)
class DistanceSpec:
    """A fully deterministic description of a distance function."""

    base: Metric
    theta: float = 0.0  # per-day decay rate; 0 disables time sensitivity
    sim_source: Optional[CooccurrenceMatrix] = field(default=None, compare=False)

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if self.base in _SED_FAMILY and self.sim_source is None:
            raise ValueError(f"{self.base.value} requires a similarity source")


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Word-level Levenshtein distance with unit costs."""
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    prev = list(range(m + 1))
    cur = [0] * (m + 1)
    for i in range(1, n + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] + (0 if ai == b[j - 1] else 1)
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


def _boundary_costs_generic(seq: Sequence, sim: SimFn) -> list[float]:
    if not seq:
        return []
    # first position has no predecessor: unit cost
    return [1.0] + [1.0 - sim(seq[i], seq[i - 1]) for i in range(1, len(seq))]


def semantic_edit_distance(a: Sequence, b: Sequence, sim: SimFn) -> float:
    """Edit distance whose operation costs are one minus word similarity.

    Deleting a_i or inserting b_i costs 1 - sim(token, its predecessor in the
    same sequence) with unit cost at the first position; substituting a_i by
    b_j costs 1 - sim(a_i, b_j), and equal tokens cost 0. All three moves
    compete at every cell, so the result is the minimum cost over every edit
    script.
    """
    n, m = len(a), len(b)
    del_a = _boundary_costs_generic(a, sim)
    ins_b = _boundary_costs_generic(b, sim)
    if n == 0 or m == 0:
        return float(sum(ins_b if n == 0 else del_a))
    prev = [0.0] * (m + 1)
    cur = [0.0] * (m + 1)
    for j in range(1, m + 1):
        prev[j] = prev[j - 1] + ins_b[j - 1]
    for i in range(1, n + 1):
        ai = a[i - 1]
        di = del_a[i - 1]
        cur[0] = prev[0] + di
        for j in range(1, m + 1):
            sub = 0.0 if ai == b[j - 1] else 1.0 - sim(ai, b[j - 1])
            best = prev[j - 1] + sub
            if prev[j] + di < best:
                best = prev[j] + di
            if cur[j - 1] + ins_b[j - 1] < best:
                best = cur[j - 1] + ins_b[j - 1]
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


def sed_max_normalized(a: Sequence, b: Sequence, sim: SimFn) -> float:
    """SED divided by max(|a|, |b|); 0 when both sequences are empty."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return semantic_edit_distance(a, b, sim) / longest


def sed_ed_normalized(a: Sequence, b: Sequence, sim: SimFn) -> float:
    """SED divided by ED; 0 when ED is 0 (identical sequences)."""
    ed = edit_distance(a, b)
    if ed == 0:
        return 0.0
    return semantic_edit_distance(a, b, sim) / ed


def cosine_distance(a: Sequence, b: Sequence) -> float:
    """1 - cosine of bag-of-words count vectors; 1 if either bag is empty."""
    bag_a: dict = {}
    for t in a:
        bag_a[t] = bag_a.get(t, 0) + 1
    bag_b: dict = {}
    for t in b:
        bag_b[t] = bag_b.get(t, 0) + 1
    if bag_a == bag_b:
        return 0.0 if bag_a else 1.0
    if not bag_a or not bag_b:
        return 1.0
    dot = 0.0
    for t in sorted(bag_a):  # fixed order: deterministic accumulation
        if t in bag_b:
            dot += bag_a[t] * bag_b[t]
    na = np.sqrt(np.float64(sum(c * c for c in bag_a.values())))
    nb = np.sqrt(np.float64(sum(c * c for c in bag_b.values())))
    cos = dot / (na * nb)
    if cos > 1.0:
        cos = 1.0
    return float(1.0 - cos)


def time_sensitive(base_distance: float, t_i: int, t_j: int, theta: float) -> float:
    """Apply the exponential time penalty: base * exp(theta * |dt| / day).

    A zero base stays zero; an overflowing product saturates to the largest
    finite float instead of propagating infinity.
    """
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    if base_distance == 0.0:
        return 0.0
    dt_days = abs(t_i - t_j) / SECONDS_PER_DAY
    with np.errstate(over="ignore"):
        value = base_distance * float(np.exp(np.float64(theta * dt_days)))
    if value > _FLOAT_MAX:
        return _FLOAT_MAX
    return value


def apply_time_decay(base: np.ndarray, ts_a: np.ndarray, ts_b: np.ndarray,
                     theta: float) -> np.ndarray:
    """Vectorized Eq-style decay of a whole base-distance matrix."""
    if theta == 0.0:
        return base.copy()
    dt_days = np.abs(ts_a[:, None] - ts_b[None, :]) / SECONDS_PER_DAY
    with np.errstate(over="ignore", invalid="ignore"):
        out = base * np.exp(theta * dt_days)
    out = np.where(np.isinf(out), _FLOAT_MAX, out)
    return np.where(base == 0.0, 0.0, out)


def _flatten(items: Sequence[TraceItem]) -> tuple[np.ndarray, np.ndarray]:
    offsets = np.zeros(len(items) + 1, dtype=np.int64)
    for i, it in enumerate(items):
        offsets[i + 1] = offsets[i] + len(it.tokens)
    tokens = np.empty(offsets[-1], dtype=np.int32)
    for i, it in enumerate(items):
        tokens[offsets[i]:offsets[i + 1]] = it.tokens
    return tokens, offsets


def _flatten_costs(items: Sequence[TraceItem], offsets: np.ndarray,
                   sim_source: CooccurrenceMatrix) -> np.ndarray:
    costs = np.empty(offsets[-1], dtype=np.float64)
    for i, it in enumerate(items):
        costs[offsets[i]:offsets[i + 1]] = boundary_costs(it.tokens, sim_source)
    return costs


def timestamps(items: Sequence[TraceItem]) -> np.ndarray:
    return np.array([it.timestamp for it in items], dtype=np.int64)


def _base_matrix_block(items_a, items_b, base: Metric, sim_source) -> np.ndarray:
    tok_a, off_a = _flatten(items_a)
    tok_b, off_b = _flatten(items_b)
    if base is Metric.ED:
        return _backend.ed_matrix(tok_a, off_a, tok_b, off_b)
    if base is Metric.COSINE:
        out = np.empty((len(items_a), len(items_b)), dtype=np.float64)
        for p, a in enumerate(items_a):
            for q, b in enumerate(items_b):
                out[p, q] = cosine_distance(a.tokens, b.tokens)
        return out
    csr = sim_source.csr_arrays()
    cost_a = _flatten_costs(items_a, off_a, sim_source)
    cost_b = _flatten_costs(items_b, off_b, sim_source)
    sed = _backend.sed_matrix(tok_a, off_a, cost_a, tok_b, off_b, cost_b, *csr)
    if base is Metric.SED:
        return sed
    if base is Metric.SED_MAX:
        len_a = np.diff(off_a).astype(np.float64)
        len_b = np.diff(off_b).astype(np.float64)
        longest = np.maximum(len_a[:, None], len_b[None, :])
        return np.divide(sed, longest, out=np.zeros_like(sed), where=longest > 0)
    ed = _backend.ed_matrix(tok_a, off_a, tok_b, off_b)
    return np.divide(sed, ed, out=np.zeros_like(sed), where=ed > 0)


def _worker_block(args):
    items_a, items_b, base, sim_source = args
    return _base_matrix_block(items_a, items_b, base, sim_source)


def base_matrix(items_a: Sequence[TraceItem], items_b: Sequence[TraceItem],
                base: Metric, sim_source: Optional[CooccurrenceMatrix] = None,
                workers: int = 1) -> np.ndarray:
    """Distance matrix for a base metric (no time decay).

    Work may be split into row blocks across processes; every cell value is a
    pure function of its pair, so the result is identical for any worker
    count.
    """
    if base in _SED_FAMILY and sim_source is None:
        raise ValueError(f"{base.value} requires a similarity source")
    if workers <= 1 or len(items_a) < 2 * workers:
        return _base_matrix_block(items_a, items_b, base, sim_source)
    bounds = np.linspace(0, len(items_a), workers + 1, dtype=int)
    tasks = [(list(items_a[lo:hi]), list(items_b), base, sim_source)
             for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        blocks = list(pool.map(_worker_block, tasks))
    return np.vstack(blocks)


def pairwise_matrix(items_a: Sequence[TraceItem], items_b: Sequence[TraceItem],
                    spec: DistanceSpec, workers: int = 1) -> np.ndarray:
    """Full distance matrix under a DistanceSpec (base metric plus decay)."""
    out = base_matrix(items_a, items_b, spec.base, spec.sim_source, workers=workers)
    if spec.theta > 0.0:
        out = apply_time_decay(out, timestamps(items_a), timestamps(items_b), spec.theta)
    return out


class PairwiseCache:
    """Per-run cache of raw kernel matrices, keyed by an item-pair tag.

    Metrics sharing a kernel (SED and t-SED; SED/Max and SED/ED; ED and
    t-ED) reuse one matrix instead of recomputing it. Values are cached by
    the caller-supplied tag, so the same tag must always name the same item
    lists. Purely an optimization: cached results are the exact arrays the
    uncached path would produce.
    """

    def __init__(self, workers: int = 1):
        self.workers = workers
        self._store: dict[tuple, np.ndarray] = {}

    def clear(self) -> None:
        self._store.clear()

    def _kernel(self, tag: tuple, kernel: str, compute) -> np.ndarray:
        key = (tag, kernel)
        if key not in self._store:
            self._store[key] = compute()
        return self._store[key]

    def base(self, tag: tuple, items_a: Sequence[TraceItem],
             items_b: Sequence[TraceItem], base: Metric,
             sim_source: Optional[CooccurrenceMatrix]) -> np.ndarray:
        if base is Metric.ED:
            return self._kernel(tag, "ed", lambda: base_matrix(
                items_a, items_b, Metric.ED, None, self.workers))
        if base is Metric.COSINE:
            return self._kernel(tag, "cos", lambda: base_matrix(
                items_a, items_b, Metric.COSINE, None, self.workers))
        sed = self._kernel(tag, "sed", lambda: base_matrix(
            items_a, items_b, Metric.SED, sim_source, self.workers))
        if base is Metric.SED:
            return sed
        if base is Metric.SED_MAX:
            len_a = np.array([len(it.tokens) for it in items_a], dtype=np.float64)
            len_b = np.array([len(it.tokens) for it in items_b], dtype=np.float64)
            longest = np.maximum(len_a[:, None], len_b[None, :])
            return np.divide(sed, longest, out=np.zeros_like(sed), where=longest > 0)
        ed = self._kernel(tag, "ed", lambda: base_matrix(
            items_a, items_b, Metric.ED, None, self.workers))
        return np.divide(sed, ed, out=np.zeros_like(sed), where=ed > 0)


_MATRIX_MAGIC = b"TSDM"
_MATRIX_VERSION = 1


def write_matrix_csv(matrix: np.ndarray, row_ids: Sequence[int],
                     col_ids: Sequence[int], path: str | Path) -> None:
    """Matrix as CSV with 9-significant-digit values and item_id headers."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("item_id," + ",".join(str(c) for c in col_ids) + "\n")
        for rid, row in zip(row_ids, matrix):
            fh.write(str(rid) + "," + ",".join(f"{v:.9g}" for v in row) + "\n")


def write_matrix_binary(matrix: np.ndarray, path: str | Path) -> None:
    """Matrix as little-endian binary: magic, version, dims, row-major f64."""
    with open(path, "wb") as fh:
        fh.write(_MATRIX_MAGIC)
        fh.write(struct.pack("<I", _MATRIX_VERSION))
        fh.write(struct.pack("<QQ", matrix.shape[0], matrix.shape[1]))
        fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())


def read_matrix_binary(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:4] != _MATRIX_MAGIC:
        raise ValueError(f"{path} is not a distance-matrix file")
    version, = struct.unpack_from("<I", raw, 4)
    if version != _MATRIX_VERSION:
        raise ValueError(f"unsupported matrix file version {version}")
    rows, cols = struct.unpack_from("<QQ", raw, 8)
    data = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=24)
    return data.reshape(rows, cols).copy()
