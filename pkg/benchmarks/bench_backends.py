"""Compare the compiled DP kernels to the pure-Python fallback.

Usage: python benchmarks/bench_backends.py [--pairs 400x400] [--skip-python]

Builds a synthetic corpus, times ed_matrix/sed_matrix on both backends, and
verifies the outputs are bit-identical.
"""

import argparse
import random
import time

import numpy as np

from tracesim import _kernels_py
from tracesim.cooccur import build_cooccurrence
from tracesim.corpus import RoleLabel, TraceItem, Vocabulary
from tracesim.distance import _flatten, _flatten_costs

try:
    from tracesim import _kernels
except ImportError:
    _kernels = None


def build_workload(n_items: int, vocab_size: int = 400, seed: int = 0):
    rng = random.Random(seed)
    vocab = Vocabulary([f"w{i}" for i in range(vocab_size)], [1] * vocab_size, 1)
    items = []
    for i in range(n_items):
        length = rng.randint(6, 14)
        toks = tuple(rng.randrange(vocab_size) for _ in range(length))
        items.append(TraceItem(i, f"a{i}", i * 3600, toks, RoleLabel(i % 3)))
    sim = build_cooccurrence(items, vocab)
    tok, off = _flatten(items)
    cost = _flatten_costs(items, off, sim)
    return tok, off, cost, sim.csr_arrays()


def run(fn, *args, repeat: int = 1):
    best = float("inf")
    out = None
    for _ in range(repeat):
        started = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - started)
    return out, best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", default="300x300",
                        help="matrix shape as ROWSxCOLS (items are reused)")
    parser.add_argument("--skip-python", action="store_true",
                        help="time only the compiled backend")
    args = parser.parse_args()
    rows, cols = (int(v) for v in args.pairs.lower().split("x"))
    n = max(rows, cols)
    tok, off, cost, csr = build_workload(n)
    tok_a, off_a, cost_a = tok[:int(off[rows])], off[:rows + 1], cost[:int(off[rows])]

    layout = "{:<22} {:>12} {:>14}"
    print(layout.format("kernel", "time (s)", "pairs/s"))
    results = {}
    benches = [("ed_matrix", (tok_a, off_a, tok, off)),
               ("sed_matrix", (tok_a, off_a, cost_a, tok, off, cost, *csr))]
    for backend_name, module in (("compiled", _kernels), ("python", _kernels_py)):
        if module is None:
            print(f"compiled backend unavailable; skipping")
            continue
        if backend_name == "python" and args.skip_python:
            continue
        for fn_name, fn_args in benches:
            out, took = run(getattr(module, fn_name), *fn_args)
            results[(backend_name, fn_name)] = (out, took)
            print(layout.format(f"{backend_name}.{fn_name}", f"{took:.3f}",
                                f"{out.size / took:,.0f}"))

    for fn_name, _ in benches:
        pair = [(b, r) for (b, f), r in results.items() if f == fn_name]
        if len(pair) == 2:
            by_name = dict(pair)
            identical = np.array_equal(by_name["compiled"][0], by_name["python"][0])
            speedup = by_name["python"][1] / by_name["compiled"][1]
            print(f"{fn_name}: speedup {speedup:,.0f}x, bit-identical: {identical}")


if __name__ == "__main__":
    main()
