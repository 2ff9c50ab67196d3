"""Rehearse the full-corpus evaluation at realistic shape with synthetic data.

Generates a corpus shaped like the public troll-tweet dump (733 accounts in a
233/447/53 class mix, Zipfian vocabularies with shared common words, three
years of timestamps), then runs the ingest -> evaluate pipeline for the four
headline metrics and reports wall-clock per stage. Useful to budget a real
full-scale run; nothing here asserts accuracy.

Usage: python benchmarks/scale_rehearsal.py [--rows 150000] [--sample 50] [--workers N]
"""

import argparse
import random
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

from tracesim.cli import main as cli_main

CLASS_ACCOUNTS = {"LeftTroll": 233, "RightTroll": 447, "NewsFeed": 53}
START = int(datetime(2015, 1, 1, tzinfo=timezone.utc).timestamp())
END = int(datetime(2018, 1, 1, tzinfo=timezone.utc).timestamp())


def zipf_pool(prefix: str, size: int):
    return [f"{prefix}{i}" for i in range(size)]


def generate_csv(path: Path, rows: int, seed: int = 0) -> None:
    rng = random.Random(seed)
    shared = zipf_pool("common", 2000)
    pools = {label: zipf_pool(label.lower(), 4000) for label in CLASS_ACCOUNTS}
    accounts = [(f"{label.lower()}_{i:04d}", label)
                for label, n in CLASS_ACCOUNTS.items() for i in range(n)]
    weights = [1 / (r + 1) for r in range(4000)]  # Zipf-ish rank weights
    shared_weights = weights[:2000]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("author,content,publish_date,account_category\n")
        for _ in range(rows):
            account, label = rng.choice(accounts)
            n_own = rng.randint(4, 10)
            n_shared = rng.randint(2, 5)
            words = rng.choices(pools[label], weights=weights, k=n_own)
            words += rng.choices(shared, weights=shared_weights, k=n_shared)
            rng.shuffle(words)
            ts = rng.randrange(START, END)
            stamp = datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%m/%d/%Y %H:%M")
            fh.write(f"{account},{' '.join(words)},{stamp},{label}\n")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=150_000)
    parser.add_argument("--sample", type=int, default=50)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--metrics", default="SED,t-SED,ED,t-ED")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as td:
        td = Path(td)
        csv_path = td / "rehearsal.csv"
        print(f"generating {args.rows} rows ...", flush=True)
        started = time.perf_counter()
        generate_csv(csv_path, args.rows)
        print(f"  generate: {time.perf_counter() - started:.1f}s")

        started = time.perf_counter()
        code = cli_main(["ingest", "--input", str(csv_path), "--min-count", "3",
                         "--out", str(td / "corpus")])
        if code != 0:
            return code
        print(f"  ingest:   {time.perf_counter() - started:.1f}s")

        started = time.perf_counter()
        code = cli_main(["evaluate", "--corpus", str(td / "corpus"),
                         "--metric", args.metrics,
                         "--sample", str(args.sample), "--seed", "1",
                         "--workers", str(args.workers),
                         "--out", str(td / "eval")])
        if code != 0:
            return code
        print(f"  evaluate ({args.metrics}): {time.perf_counter() - started:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
