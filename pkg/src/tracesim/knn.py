"""K-nearest-neighbor tweet classification and account-level majority voting.

Neighbor search is exact brute force over the training pool (the semantic
distances carry no triangle-inequality guarantee, so index structures are
unsound). Every tie has a deterministic rule:

* ties at the k-th distance go to the smaller item_id;
* vote ties between labels go to the smaller summed distance within the tied
  labels, then to the fixed label order (Left < Right < News);
* account-level vote ties go to the label with more training accounts, then
  to the fixed label order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import RoleLabel, TraceItem
from .distance import DistanceSpec, pairwise_matrix


@dataclass(frozen=True)
class Neighbor:
    item_id: int
    distance: float
    label: RoleLabel


@dataclass(frozen=True)
class NeighborSet:
    query_id: int
    neighbors: tuple[Neighbor, ...]  # size k, nondecreasing distance


def _check_pool(train: Sequence[TraceItem], k: int) -> None:
    if not train:
        raise ValueError("empty training set")
    if not 1 <= k <= len(train):
        raise ValueError(f"k must be in [1, {len(train)}], got {k}")
    for t in train:
        if t.label is None:
            raise ValueError(f"training item {t.item_id} has no label")


def nearest_neighbors(distances: np.ndarray, train: Sequence[TraceItem],
                      k: int, query_id: int = -1) -> NeighborSet:
    """Pick the k nearest training items from one query's distance row."""
    ids = np.array([t.item_id for t in train], dtype=np.int64)
    order = np.lexsort((ids, distances))[:k]
    return NeighborSet(query_id, tuple(
        Neighbor(int(ids[i]), float(distances[i]), train[i].label) for i in order))


def vote_label(neighbors: Sequence[Neighbor]) -> RoleLabel:
    """Modal neighbor label; ties by smaller summed distance, then label order."""
    counts: dict[RoleLabel, int] = {}
    sums: dict[RoleLabel, float] = {}
    for nb in neighbors:
        counts[nb.label] = counts.get(nb.label, 0) + 1
        sums[nb.label] = sums.get(nb.label, 0.0) + nb.distance
    return min(counts, key=lambda lab: (-counts[lab], sums[lab], lab))


def predict_tweet(query: TraceItem, train: Sequence[TraceItem], k: int,
                  spec: DistanceSpec) -> RoleLabel:
    """Classify one tweet by majority label of its k nearest training tweets."""
    _check_pool(train, k)
    if query.is_empty:
        raise ValueError(f"query item {query.item_id} has an empty token sequence")
    row = pairwise_matrix([query], train, spec)[0]
    return vote_label(nearest_neighbors(row, train, k, query.item_id).neighbors)


def majority_account_label(tweet_labels: Sequence[RoleLabel],
                           train_account_counts: Mapping[RoleLabel, int]) -> RoleLabel:
    """Modal tweet label; ties by more training accounts, then label order."""
    if not tweet_labels:
        raise ValueError("no tweet predictions to vote over")
    counts: dict[RoleLabel, int] = {}
    for lab in tweet_labels:
        counts[lab] = counts.get(lab, 0) + 1
    return min(counts, key=lambda lab: (-counts[lab], -train_account_counts.get(lab, 0), lab))


def predict_account(account_items: Sequence[TraceItem], train: Sequence[TraceItem],
                    k: int, spec: DistanceSpec,
                    train_account_counts: Optional[Mapping[RoleLabel, int]] = None) -> RoleLabel:
    """Classify an account as the majority label of its tweets' predictions."""
    usable = [it for it in account_items if not it.is_empty]
    if not usable:
        raise ValueError("account has no nonempty items")
    if train_account_counts is None:
        train_account_counts = count_training_accounts(train)
    predictions = [predict_tweet(it, train, k, spec) for it in usable]
    return majority_account_label(predictions, train_account_counts)


def count_training_accounts(train: Sequence[TraceItem]) -> dict[RoleLabel, int]:
    accounts: dict[RoleLabel, set] = {}
    for it in train:
        accounts.setdefault(it.label, set()).add(it.account_id)
    return {lab: len(accs) for lab, accs in accounts.items()}


def rank_rows(distances: np.ndarray, train: Sequence[TraceItem]) -> np.ndarray:
    """Neighbor ordering per query row: by distance, then smaller item_id."""
    if len(distances) == 0:
        return np.empty((0, len(train)), dtype=np.int64)
    ids = np.array([t.item_id for t in train], dtype=np.int64)
    return np.stack([np.lexsort((ids, row)) for row in distances])


def predict_ranked(distances: np.ndarray, orders: np.ndarray,
                   train: Sequence[TraceItem], k: int) -> list[RoleLabel]:
    """Vote over the first k ranked neighbors; orders from rank_rows.

    Grid search reuses one ranking across every k, which cannot change the
    outcome: the k-prefix of a full ranking is exactly the k nearest set.
    """
    _check_pool(train, k)
    ids = [t.item_id for t in train]
    labels = [t.label for t in train]
    out = []
    for row, order in zip(distances, orders):
        picked = order[:k]
        out.append(vote_label([Neighbor(ids[i], float(row[i]), labels[i])
                               for i in picked]))
    return out


def predict_rows(distances: np.ndarray, train: Sequence[TraceItem],
                 k: int) -> list[RoleLabel]:
    """Per-row tweet predictions from a precomputed query x train matrix.

    Equivalent to predict_tweet per row; the matrix form lets grid search
    reuse one base matrix across every (k, theta) cell.
    """
    return predict_ranked(distances, rank_rows(distances, train), train, k)


def write_predictions(path: str | Path, rows: Sequence[tuple],
                      k: Optional[int], metric: str, theta: Optional[float]) -> None:
    """Dump per-tweet predictions: item_id, account_id, labels, and settings."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item_id", "account_id", "true_label", "predicted_label",
                         "k", "metric", "theta"])
        for item_id, account_id, true_label, predicted in rows:
            writer.writerow([
                item_id, account_id,
                true_label.display() if true_label is not None else "",
                predicted.display(),
                "" if k is None else k,
                metric,
                "" if theta is None else f"{theta:.9g}",
            ])
