"""Command-line pipeline: ingest -> evaluate -> export.

Exit codes: 0 success, 2 configuration or input error, 1 internal error.
Artifacts are plain files; the ingest manifest records content hashes that
later stages verify, so stale or hand-edited artifacts are rejected.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import random
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from ._backend import BACKEND_NAME
from .baseline_lr import LRConfig
from .cooccur import CooccurrenceMatrix, build_cooccurrence
from .corpus import (ColumnMap, ConfigurationError, Vocabulary, build_vocabulary,
                     ingest_csv, materialize, read_audit, write_audit)
from .distance import (DistanceSpec, pairwise_matrix, write_matrix_binary,
                       write_matrix_csv)
from .evaluate import (ALL_METRICS, DEFAULT_K_GRID, DEFAULT_RATIOS,
                       DEFAULT_SAMPLE_SIZE, DEFAULT_THETA_GRID, KNN_METRICS,
                       LR_METRICS, account_labels, evaluate_knn_metric,
                       evaluate_lr_metric, is_temporal, sample_split,
                       split_accounts, write_grid_csv)
from .knn import write_predictions

logger = logging.getLogger("tracesim")

MANIFEST_NAME = "manifest.json"
ITEMS_NAME = "items.tsv"
VOCAB_NAME = "vocab.tsv"
COOCCUR_NAME = "cooccur.bin"


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _default_workers() -> int:
    raw = os.environ.get("TRACESIM_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _parse_grid(text: str, kind: str):
    try:
        if kind == "int":
            return tuple(sorted({int(v) for v in text.split(",") if v.strip()}))
        return tuple(sorted({float(v) for v in text.split(",") if v.strip()}))
    except ValueError as exc:
        raise ConfigurationError(f"bad grid value: {exc}") from exc


def _metric_slug(name: str) -> str:
    return name.lower().replace("/", "-")


def apply_config_file(args: argparse.Namespace, argv: list[str]) -> None:
    """Fill flags the user did not pass from a saved config JSON.

    Keys are the long flag names without the leading dashes (dashes or
    underscores both accepted). Explicit command-line flags win.
    """
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        loaded = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"bad config file {path}: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    explicit = {a.split("=", 1)[0][2:].replace("-", "_")
                for a in argv if a.startswith("--")}
    for key, value in loaded.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config") or not hasattr(args, dest):
            continue
        if dest not in explicit:
            setattr(args, dest, value)


def _effective_config(args: argparse.Namespace, fields: tuple[str, ...]) -> dict:
    doc = {"command": args.command}
    doc.update({f.replace("_", "-"): getattr(args, f) for f in fields})
    return doc


def _require(args: argparse.Namespace, *fields: str) -> None:
    for f in fields:
        if getattr(args, f) in (None, ""):
            raise ConfigurationError(f"missing required --{f.replace('_', '-')} "
                                     "(flag or config file)")


def cmd_ingest(args: argparse.Namespace) -> int:
    _require(args, "input", "out")
    columns = ColumnMap.from_spec(args.columns)
    records, stats = ingest_csv(args.input, columns)
    if not records:
        raise ConfigurationError("no usable rows after filtering")
    vocab = build_vocabulary(records, args.min_count)
    items, mstats = materialize(records, vocab)
    cooccur = build_cooccurrence(items, vocab)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_audit(items, vocab, out / ITEMS_NAME)
    vocab.save(out / VOCAB_NAME)
    cooccur.save(out / COOCCUR_NAME)
    manifest = {
        "schema_version": 1,
        "tracesim_version": __version__,
        "input_path": str(args.input),
        "input_sha256": _sha256_file(Path(args.input)),
        "columns": vars(columns),
        "min_count": args.min_count,
        "ingest_stats": stats.as_dict(),
        "empty_items": mstats.empty_items,
        "vocab_size": len(vocab),
        "item_count": len(items),
        "artifacts": {
            name: _sha256_file(out / name)
            for name in (ITEMS_NAME, VOCAB_NAME, COOCCUR_NAME)
        },
    }
    with open(out / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    logger.info("ingested %d rows -> %d items (%d empty), vocabulary %d, "
                "co-occurrence nnz %d", stats.rows_total, len(items),
                mstats.empty_items, len(vocab), cooccur.nnz)
    return 0


def load_corpus_artifacts(corpus_dir: str | Path):
    corpus_dir = Path(corpus_dir)
    manifest_path = corpus_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ConfigurationError(f"no manifest at {manifest_path}; run ingest first")
    manifest = json.loads(manifest_path.read_text())
    for name, expected in manifest["artifacts"].items():
        actual = _sha256_file(corpus_dir / name)
        if actual != expected:
            raise ConfigurationError(
                f"artifact {name} is stale (hash {actual[:12]} != manifest {expected[:12]}); re-run ingest")
    vocab = Vocabulary.load(corpus_dir / VOCAB_NAME, manifest["min_count"])
    items = read_audit(corpus_dir / ITEMS_NAME, vocab)
    cooccur = CooccurrenceMatrix.load(corpus_dir / COOCCUR_NAME)
    return manifest, vocab, items, cooccur


def cmd_evaluate(args: argparse.Namespace) -> int:
    _require(args, "corpus", "out")
    metrics = [m.strip() for m in args.metric.split(",") if m.strip()] \
        if args.metric else list(ALL_METRICS)
    for m in metrics:
        if m not in ALL_METRICS:
            raise ConfigurationError(
                f"unknown metric {m!r}; choose from {', '.join(ALL_METRICS)}")
    k_grid = _parse_grid(args.k_grid, "int") if args.k_grid else DEFAULT_K_GRID
    theta_grid = _parse_grid(args.theta_grid, "float") if args.theta_grid else DEFAULT_THETA_GRID
    explicit_thetas = args.theta_grid is not None

    manifest, vocab, items, cooccur = load_corpus_artifacts(args.corpus)
    labeled = [it for it in items if it.label is not None]
    accounts = account_labels(labeled)
    try:
        plan = split_accounts(accounts, DEFAULT_RATIOS, args.seed)
        samples = sample_split(labeled, plan, args.sample)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    for part in ("train", "validation", "test"):
        if not samples[part]:
            raise ConfigurationError(
                f"the {part} split has no usable accounts; corpus too small")
    split_counts = plan.counts()
    dataset_hash = manifest["input_sha256"]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config_echo = _effective_config(
        args, ("corpus", "metric", "sample", "seed", "k_grid", "theta_grid", "workers"))
    with open(out / "run_config.json", "w", encoding="utf-8") as fh:
        json.dump(config_echo, fh, indent=2)
        fh.write("\n")
    for name in metrics:
        logger.info("evaluating %s (backend=%s, workers=%d)", name, BACKEND_NAME,
                    args.workers)
        if name in LR_METRICS:
            outcome = evaluate_lr_metric(
                name, samples, len(vocab), LRConfig(), args.seed, dataset_hash,
                args.sample, DEFAULT_RATIOS, split_counts)
        else:
            # an explicit theta grid runs any base metric time-sensitively
            thetas = theta_grid if (is_temporal(name) or explicit_thetas) else (0.0,)
            outcome = evaluate_knn_metric(
                name, samples,
                cooccur if KNN_METRICS[name].value.startswith("SED") else None,
                k_grid, thetas, args.seed, dataset_hash, args.sample,
                DEFAULT_RATIOS, split_counts, workers=args.workers)
        metric_dir = out / _metric_slug(name)
        metric_dir.mkdir(parents=True, exist_ok=True)
        with open(metric_dir / "report.json", "w", encoding="utf-8") as fh:
            fh.write(outcome.report.to_json())
        if outcome.grid is not None:
            write_grid_csv(outcome.grid, metric_dir / "grid.csv")
        sel = outcome.report.by_macro
        write_predictions(metric_dir / "predictions.csv", outcome.test_predictions,
                          sel.k, name, sel.theta)
        logger.info("%s: test micro F1 %.4f, macro F1 %.4f (k=%s, theta=%s) "
                    "[%.1fs]", name, sel.test.micro_f1, sel.test.macro_f1,
                    sel.k, sel.theta, outcome.report.timing_seconds)
    return 0


def _parse_window(text: str) -> tuple[int, int]:
    def parse_date(s: str) -> datetime:
        s = s.strip()
        for fmt in ("%Y-%m-%d", "%Y-%m"):
            try:
                return datetime.strptime(s, fmt).replace(tzinfo=timezone.utc)
            except ValueError:
                continue
        raise ConfigurationError(f"bad window date {s!r}; use YYYY-MM or YYYY-MM-DD")

    if "," in text:
        start_s, end_s = text.split(",", 1)
        start = parse_date(start_s)
        end = parse_date(end_s)
    else:
        start = parse_date(text)
        end = datetime(start.year + (start.month == 12), start.month % 12 + 1, 1,
                       tzinfo=timezone.utc)
    if not start < end:
        raise ConfigurationError(f"empty window {text!r}")
    return int(start.timestamp()), int(end.timestamp())


def cmd_export(args: argparse.Namespace) -> int:
    _require(args, "corpus", "metric", "window", "out")
    if args.metric not in KNN_METRICS:
        raise ConfigurationError(
            f"unknown metric {args.metric!r}; choose from {', '.join(KNN_METRICS)}")
    if is_temporal(args.metric) and args.theta <= 0:
        raise ConfigurationError(f"{args.metric} needs --theta > 0")
    start, end = _parse_window(args.window)
    _, vocab, items, cooccur = load_corpus_artifacts(args.corpus)
    window_items = [it for it in items
                    if start <= it.timestamp < end and not it.is_empty]
    if not window_items:
        raise ConfigurationError(f"no nonempty items in window {args.window!r}")
    if args.limit and len(window_items) > args.limit:
        rng = random.Random(f"{args.seed}|export")
        window_items = sorted(rng.sample(window_items, args.limit),
                              key=lambda it: it.item_id)
    base = KNN_METRICS[args.metric]
    spec = DistanceSpec(
        base=base, theta=args.theta,
        sim_source=cooccur if base.value.startswith("SED") else None)
    logger.info("exporting %d x %d %s matrix (theta=%g, backend=%s)",
                len(window_items), len(window_items), args.metric, args.theta,
                BACKEND_NAME)
    matrix = pairwise_matrix(window_items, window_items, spec, workers=args.workers)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ids = [it.item_id for it in window_items]
    write_matrix_csv(matrix, ids, ids, out / "matrix.csv")
    write_matrix_binary(matrix, out / "matrix.bin")
    with open(out / "sidecar.tsv", "w", encoding="utf-8") as fh:
        fh.write("item_id\taccount_id\tlabel\ttimestamp\n")
        for it in window_items:
            label = it.label.display() if it.label is not None else ""
            fh.write(f"{it.item_id}\t{it.account_id}\t{label}\t{it.timestamp}\n")
    logger.info("wrote matrix.csv, matrix.bin, sidecar.tsv to %s", out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracesim",
        description="Time-decayed semantic edit distance over tweet traces")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="read the CSV and build corpus artifacts")
    p_ingest.add_argument("--config", default=None,
                          help="JSON file of saved flag values (flags override)")
    p_ingest.add_argument("--input", default=None, help="troll-tweet CSV path")
    p_ingest.add_argument("--columns", default="",
                          help="logical=physical column overrides, comma separated")
    p_ingest.add_argument("--min-count", type=int, default=3,
                          help="vocabulary frequency threshold")
    p_ingest.add_argument("--out", default=None, help="corpus artifact directory")

    p_eval = sub.add_parser("evaluate", help="grid search and test-set reports")
    p_eval.add_argument("--config", default=None,
                        help="JSON file of saved flag values (flags override)")
    p_eval.add_argument("--corpus", default=None, help="corpus artifact directory")
    p_eval.add_argument("--metric", default=None,
                        help="comma-separated metric names (default: all)")
    p_eval.add_argument("--sample", type=int, default=DEFAULT_SAMPLE_SIZE,
                        help="tweets sampled per account")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--k-grid", default=None, help="comma-separated k values")
    p_eval.add_argument("--theta-grid", default=None,
                        help="comma-separated per-day decay rates")
    p_eval.add_argument("--workers", type=int, default=_default_workers())
    p_eval.add_argument("--out", default=None, help="report output directory")

    p_export = sub.add_parser("export",
                              help="pairwise distance matrix for a time window")
    p_export.add_argument("--config", default=None,
                          help="JSON file of saved flag values (flags override)")
    p_export.add_argument("--corpus", default=None, help="corpus artifact directory")
    p_export.add_argument("--metric", default=None)
    p_export.add_argument("--theta", type=float, default=0.0,
                          help="per-day decay rate (required > 0 for t-* metrics)")
    p_export.add_argument("--window", default=None,
                          help="YYYY-MM or YYYY-MM-DD,YYYY-MM-DD (end exclusive)")
    p_export.add_argument("--limit", type=int, default=0,
                          help="cap on exported items (0 = all; seeded subsample)")
    p_export.add_argument("--seed", type=int, default=0)
    p_export.add_argument("--workers", type=int, default=_default_workers())
    p_export.add_argument("--out", default=None, help="export output directory")
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    handlers = {"ingest": cmd_ingest, "evaluate": cmd_evaluate, "export": cmd_export}
    try:
        apply_config_file(args, list(argv))
        return handlers[args.command](args)
    except ConfigurationError as exc:
        logger.error("%s", exc)
        return 2
    except Exception:
        logger.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
