"""Experiment protocol: account splits, tweet sampling, grid search, F1 reports.

Accounts (never tweets) are split 50/20/30 into train/validation/test,
stratified by role. Each account contributes a fixed-size random sample of
its nonempty tweets. KNN metrics grid-search (k, theta) on validation and
report test scores at the selected configuration; LR baselines train once.
Everything is driven by string-derived per-account seeds, so results do not
depend on iteration order or worker count.
"""

from __future__ import annotations

import json
import logging
import math
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .baseline_lr import LRConfig, predict_lr_batch, train_lr
from .cooccur import CooccurrenceMatrix
from .corpus import RoleLabel, TraceItem
from .distance import Metric, apply_time_decay, base_matrix, timestamps
from .knn import (count_training_accounts, majority_account_label, predict_ranked,
                  predict_rows, rank_rows)

logger = logging.getLogger(__name__)

LABEL_ORDER = (RoleLabel.LEFT_TROLL, RoleLabel.RIGHT_TROLL, RoleLabel.NEWS_FEED)

DEFAULT_RATIOS = (0.5, 0.2, 0.3)
DEFAULT_K_GRID = tuple(range(1, 11))
DEFAULT_THETA_GRID = (0.0, 0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0)
DEFAULT_SAMPLE_SIZE = 50

KNN_METRICS = {
    "ED": Metric.ED,
    "t-ED": Metric.ED,
    "Cosine": Metric.COSINE,
    "t-Cosine": Metric.COSINE,
    "SED": Metric.SED,
    "t-SED": Metric.SED,
    "SED/Max": Metric.SED_MAX,
    "SED/ED": Metric.SED_RATIO,
}
LR_METRICS = ("LR", "t-LR")
ALL_METRICS = tuple(KNN_METRICS) + LR_METRICS


def is_temporal(metric_name: str) -> bool:
    return metric_name.startswith("t-")


@dataclass(frozen=True)
class SplitPlan:
    seed: int
    ratios: tuple[float, float, float]
    train: dict[RoleLabel, tuple[str, ...]]
    validation: dict[RoleLabel, tuple[str, ...]]
    test: dict[RoleLabel, tuple[str, ...]]

    def accounts(self, part: str) -> list[tuple[str, RoleLabel]]:
        split = getattr(self, part)
        out = []
        for label in LABEL_ORDER:
            out.extend((acc, label) for acc in split.get(label, ()))
        return out

    def counts(self) -> dict[str, dict[str, int]]:
        return {part: {lab.display(): len(getattr(self, part).get(lab, ()))
                       for lab in LABEL_ORDER}
                for part in ("train", "validation", "test")}


def account_labels(items: Sequence[TraceItem]) -> dict[str, RoleLabel]:
    """Label per account; a mixed-label account resolves to its majority.

    The source data is expected to label each handle consistently, so a mix
    is logged. Ties go to the fixed label order.
    """
    votes: dict[str, dict[RoleLabel, int]] = {}
    for it in items:
        if it.label is None:
            continue
        votes.setdefault(it.account_id, {}).setdefault(it.label, 0)
        votes[it.account_id][it.label] += 1
    out = {}
    for account, counts in votes.items():
        if len(counts) > 1:
            logger.warning("account %s carries %d different labels; using majority",
                           account, len(counts))
        out[account] = min(counts, key=lambda lab: (-counts[lab], lab))
    return out


def split_accounts(accounts: Mapping[str, RoleLabel],
                   ratios: tuple[float, float, float] = DEFAULT_RATIOS,
                   seed: int = 0) -> SplitPlan:
    """Stratified per-class account split; floor rounding, remainder to test."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    by_label: dict[RoleLabel, list[str]] = {}
    for acc, label in accounts.items():
        by_label.setdefault(label, []).append(acc)
    train, valid, test = {}, {}, {}
    for label, accs in sorted(by_label.items()):
        if len(accs) < 3:
            raise ValueError(f"class {label.display()} has {len(accs)} accounts; need >= 3")
        accs = sorted(accs)
        random.Random(f"{seed}|split|{label.display()}").shuffle(accs)
        n_train = math.floor(ratios[0] * len(accs))
        n_valid = math.floor(ratios[1] * len(accs))
        train[label] = tuple(accs[:n_train])
        valid[label] = tuple(accs[n_train:n_train + n_valid])
        test[label] = tuple(accs[n_train + n_valid:])
    plan = SplitPlan(seed=seed, ratios=tuple(ratios), train=train,
                     validation=valid, test=test)
    _check_disjoint(plan, set(accounts))
    return plan


def _check_disjoint(plan: SplitPlan, expected: set) -> None:
    # cheap sanity run on every split: parts disjoint and exhaustive
    parts = [set(a for a, _ in plan.accounts(p))
             for p in ("train", "validation", "test")]
    union = parts[0] | parts[1] | parts[2]
    if len(union) != sum(len(p) for p in parts):
        raise AssertionError("split parts overlap")
    if union != expected:
        raise AssertionError("split does not exhaust the labeled accounts")


def sample_tweets(account_items: Sequence[TraceItem], n: int, seed) -> list[TraceItem]:
    """Uniform sample without replacement of min(n, nonempty items)."""
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    usable = sorted((it for it in account_items if not it.is_empty),
                    key=lambda it: it.item_id)
    rng = random.Random(seed)
    if len(usable) <= n:
        return usable
    picked = rng.sample(usable, n)
    return sorted(picked, key=lambda it: it.item_id)


@dataclass(frozen=True)
class ScoreSet:
    micro_f1: float
    macro_f1: float
    per_class: dict[RoleLabel, dict[str, float]]
    confusion: tuple[tuple[int, ...], ...]  # rows true, cols predicted

    def as_dict(self) -> dict:
        return {
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "per_class": {lab.display(): self.per_class[lab] for lab in LABEL_ORDER},
            "confusion": [list(row) for row in self.confusion],
        }


def f1_scores(true_labels: Sequence[RoleLabel],
              predicted_labels: Sequence[RoleLabel]) -> ScoreSet:
    """Per-class precision/recall/F1 plus micro and macro aggregates.

    Undefined precision or recall (zero denominator) counts as 0; macro F1
    averages over all three classes regardless of presence in the sample.
    """
    if len(true_labels) != len(predicted_labels) or not true_labels:
        raise ValueError("label lists must be nonempty and equal length")
    k = len(LABEL_ORDER)
    confusion = [[0] * k for _ in range(k)]
    for t, p in zip(true_labels, predicted_labels):
        confusion[int(t)][int(p)] += 1
    per_class = {}
    f1_sum = 0.0
    correct = 0
    for lab in LABEL_ORDER:
        i = int(lab)
        tp = confusion[i][i]
        fp = sum(confusion[r][i] for r in range(k)) - tp
        fn = sum(confusion[i][c] for c in range(k)) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[lab] = {"precision": precision, "recall": recall, "f1": f1,
                          "support": tp + fn}
        f1_sum += f1
        correct += tp
    return ScoreSet(
        micro_f1=correct / len(true_labels),
        macro_f1=f1_sum / k,
        per_class=per_class,
        confusion=tuple(tuple(row) for row in confusion),
    )


@dataclass
class AccountSample:
    account_id: str
    label: RoleLabel
    items: list[TraceItem]


def sample_split(items: Sequence[TraceItem], plan: SplitPlan,
                 sample_size: int) -> dict[str, list[AccountSample]]:
    """Sample every account in the plan; drops accounts with no usable tweets."""
    by_account: dict[str, list[TraceItem]] = {}
    for it in items:
        by_account.setdefault(it.account_id, []).append(it)
    out: dict[str, list[AccountSample]] = {}
    for part in ("train", "validation", "test"):
        samples = []
        for account_id, label in plan.accounts(part):
            chosen = sample_tweets(by_account.get(account_id, []), sample_size,
                                   f"{plan.seed}|sample|{account_id}")
            if not chosen:
                logger.warning("account %s has no nonempty tweets; dropped from %s",
                               account_id, part)
                continue
            samples.append(AccountSample(account_id, label, chosen))
        out[part] = samples
    return out


@dataclass(frozen=True)
class GridCell:
    k: int
    theta: float
    micro_f1: float
    macro_f1: float


@dataclass
class GridResult:
    cells: list[GridCell]
    best_by_macro: tuple[int, float]  # (k, theta)
    best_by_micro: tuple[int, float]

    def cell(self, k: int, theta: float) -> GridCell:
        for c in self.cells:
            if c.k == k and c.theta == theta:
                return c
        raise KeyError((k, theta))


def _argbest(cells: Sequence[GridCell], attr: str) -> tuple[int, float]:
    # ties toward smaller k, then smaller theta: scan in (k, theta) order
    best = None
    best_score = -1.0
    for cell in sorted(cells, key=lambda c: (c.k, c.theta)):
        score = getattr(cell, attr)
        if score > best_score:
            best = cell
            best_score = score
    return best.k, best.theta


def _account_scores(samples: Sequence[AccountSample], predictions: Sequence[RoleLabel],
                    offsets: Sequence[int],
                    train_account_counts: Mapping[RoleLabel, int]) -> ScoreSet:
    truths, votes = [], []
    for s, (lo, hi) in zip(samples, zip(offsets[:-1], offsets[1:])):
        votes.append(majority_account_label(predictions[lo:hi], train_account_counts))
        truths.append(s.label)
    return f1_scores(truths, votes)


def grid_search(queries: Sequence[AccountSample], train_pool: Sequence[TraceItem],
                base: Metric, sim_source: Optional[CooccurrenceMatrix],
                k_grid: Sequence[int], theta_grid: Sequence[float],
                workers: int = 1) -> GridResult:
    """Evaluate every (k, theta) on the validation accounts.

    The base matrix is computed once; each theta reweights it and each k
    reuses the same reweighted matrix, so the surface is exact yet cheap.
    """
    if not k_grid or not theta_grid:
        raise ValueError("k and theta grids must be nonempty")
    if not queries:
        raise ValueError("no validation accounts to search over "
                         "(corpus too small for the split ratios?)")
    if not train_pool:
        raise ValueError("empty training pool")
    flat_items = [it for s in queries for it in s.items]
    offsets = np.cumsum([0] + [len(s.items) for s in queries]).tolist()
    counts = count_training_accounts(train_pool)
    base_m = base_matrix(flat_items, train_pool, base, sim_source, workers=workers)
    ts_q = timestamps(flat_items)
    ts_t = timestamps(train_pool)
    cells = []
    for theta in sorted(theta_grid):
        decayed = apply_time_decay(base_m, ts_q, ts_t, theta)
        orders = rank_rows(decayed, train_pool)
        for k in sorted(k_grid):
            preds = predict_ranked(decayed, orders, train_pool, k)
            scores = _account_scores(queries, preds, offsets, counts)
            cells.append(GridCell(k=k, theta=theta, micro_f1=scores.micro_f1,
                                  macro_f1=scores.macro_f1))
    cells.sort(key=lambda c: (c.k, c.theta))
    return GridResult(cells=cells,
                      best_by_macro=_argbest(cells, "macro_f1"),
                      best_by_micro=_argbest(cells, "micro_f1"))


@dataclass
class Selection:
    k: Optional[int]
    theta: Optional[float]
    validation_micro_f1: Optional[float]
    validation_macro_f1: Optional[float]
    test: ScoreSet

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "theta": self.theta,
            "validation_micro_f1": self.validation_micro_f1,
            "validation_macro_f1": self.validation_macro_f1,
            "test": self.test.as_dict(),
        }


@dataclass
class EvalReport:
    metric: str
    seed: int
    dataset_hash: str
    sample_size: int
    ratios: tuple[float, float, float]
    k_grid: tuple[int, ...]
    theta_grid: tuple[float, ...]
    split_counts: dict
    by_macro: Selection
    by_micro: Selection
    timing_seconds: float = 0.0  # logged, never serialized: reports must be byte-stable

    def to_json(self) -> str:
        doc = {
            "schema_version": 1,
            "metric": self.metric,
            "seed": self.seed,
            "dataset_sha256": self.dataset_hash,
            "sample_size": self.sample_size,
            "ratios": list(self.ratios),
            "k_grid": list(self.k_grid),
            "theta_grid": list(self.theta_grid),
            "split_account_counts": self.split_counts,
            "selection_by_macro": self.by_macro.as_dict(),
            "selection_by_micro": self.by_micro.as_dict(),
        }
        return json.dumps(doc, indent=2) + "\n"


@dataclass
class MetricOutcome:
    report: EvalReport
    grid: Optional[GridResult]
    test_predictions: list[tuple]  # (item_id, account_id, true_label, predicted)


def evaluate_knn_metric(metric_name: str, samples: dict[str, list[AccountSample]],
                        sim_source: Optional[CooccurrenceMatrix],
                        k_grid: Sequence[int], theta_grid: Sequence[float],
                        seed: int, dataset_hash: str, sample_size: int,
                        ratios: tuple[float, float, float], split_counts: dict,
                        workers: int = 1) -> MetricOutcome:
    started = time.perf_counter()
    base = KNN_METRICS[metric_name]
    thetas = tuple(sorted(theta_grid))
    train_pool = [it for s in samples["train"] for it in s.items]
    counts = count_training_accounts(train_pool)
    grid = grid_search(samples["validation"], train_pool, base, sim_source,
                       k_grid, thetas, workers=workers)
    # one test base matrix serves both selections; only the decay differs
    test_samples = samples["test"]
    flat_test = [it for s in test_samples for it in s.items]
    offsets = np.cumsum([0] + [len(s.items) for s in test_samples]).tolist()
    test_base = base_matrix(flat_test, train_pool, base, sim_source, workers=workers)
    ts_q = timestamps(flat_test)
    ts_t = timestamps(train_pool)
    selections = {}
    score_cache: dict[tuple[int, float], tuple[ScoreSet, list]] = {}
    for mode, (k, theta) in (("macro", grid.best_by_macro), ("micro", grid.best_by_micro)):
        if (k, theta) not in score_cache:
            decayed = apply_time_decay(test_base, ts_q, ts_t, theta)
            preds = predict_rows(decayed, train_pool, k)
            scores = _account_scores(test_samples, preds, offsets, counts)
            dump = [(it.item_id, it.account_id, it.label, pred)
                    for it, pred in zip(flat_test, preds)]
            score_cache[(k, theta)] = (scores, dump)
        test_scores, dump = score_cache[(k, theta)]
        cell = grid.cell(k, theta)
        selections[mode] = Selection(k=k, theta=theta,
                                     validation_micro_f1=cell.micro_f1,
                                     validation_macro_f1=cell.macro_f1,
                                     test=test_scores)
    report = EvalReport(
        metric=metric_name, seed=seed, dataset_hash=dataset_hash,
        sample_size=sample_size, ratios=ratios,
        k_grid=tuple(sorted(k_grid)), theta_grid=thetas,
        split_counts=split_counts,
        by_macro=selections["macro"], by_micro=selections["micro"],
        timing_seconds=time.perf_counter() - started,
    )
    dump = score_cache[grid.best_by_macro][1]
    return MetricOutcome(report=report, grid=grid, test_predictions=dump)


def evaluate_lr_metric(metric_name: str, samples: dict[str, list[AccountSample]],
                       vocab_size: int, lr_config: LRConfig,
                       seed: int, dataset_hash: str, sample_size: int,
                       ratios: tuple[float, float, float],
                       split_counts: dict) -> MetricOutcome:
    started = time.perf_counter()
    config = LRConfig(learning_rate=lr_config.learning_rate, epochs=lr_config.epochs,
                      l2=lr_config.l2, grad_tol=lr_config.grad_tol, seed=seed,
                      use_time=is_temporal(metric_name))
    train_pool = [it for s in samples["train"] for it in s.items]
    counts = count_training_accounts(train_pool)
    model = train_lr(train_pool, vocab_size, config)
    flat_items = [it for s in samples["test"] for it in s.items]
    offsets = np.cumsum([0] + [len(s.items) for s in samples["test"]]).tolist()
    preds = predict_lr_batch(model, flat_items)
    scores = _account_scores(samples["test"], preds, offsets, counts)
    selection = Selection(k=None, theta=None, validation_micro_f1=None,
                          validation_macro_f1=None, test=scores)
    report = EvalReport(
        metric=metric_name, seed=seed, dataset_hash=dataset_hash,
        sample_size=sample_size, ratios=ratios, k_grid=(), theta_grid=(),
        split_counts=split_counts, by_macro=selection, by_micro=selection,
        timing_seconds=time.perf_counter() - started,
    )
    dump = [(it.item_id, it.account_id, it.label, pred)
            for it, pred in zip(flat_items, preds)]
    return MetricOutcome(report=report, grid=None, test_predictions=dump)


def write_grid_csv(grid: GridResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k,theta,micro_f1,macro_f1\n")
        for c in grid.cells:
            fh.write(f"{c.k},{c.theta:.9g},{c.micro_f1:.9g},{c.macro_f1:.9g}\n")
