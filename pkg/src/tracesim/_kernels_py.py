"""Pure-Python DP kernels; fallback when the compiled extension is absent.

Same flat-array API as the compiled module, and the same operation order in
every loop (merge-dot accumulation, min candidate order), so both backends
produce bit-identical matrices on the same platform. Expect it to be orders
of magnitude slower; see benchmarks/bench_backends.py.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def ed_matrix(tok_a, off_a, tok_b, off_b):
    """Unit-cost word-level edit distance for every (a, b) item pair."""
    na = len(off_a) - 1
    nb = len(off_b) - 1
    out = np.empty((na, nb), dtype=np.float64)
    tok_a = [int(t) for t in tok_a]
    tok_b = [int(t) for t in tok_b]
    for p in range(na):
        a = tok_a[off_a[p]:off_a[p + 1]]
        for q in range(nb):
            b = tok_b[off_b[q]:off_b[q + 1]]
            out[p, q] = _ed_pair(a, b)
    return out


def _ed_pair(a, b):
    n = len(a)
    m = len(b)
    if n == 0:
        return float(m)
    if m == 0:
        return float(n)
    prev = list(range(m + 1))
    cur = [0] * (m + 1)
    for i in range(1, n + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] + (0 if ai == b[j - 1] else 1)
            t = prev[j] + 1
            if t < best:
                best = t
            t = cur[j - 1] + 1
            if t < best:
                best = t
            cur[j] = best
        prev, cur = cur, prev
    return float(prev[m])


def sed_matrix(tok_a, off_a, cost_a, tok_b, off_b, cost_b,
               indptr, indices, data, norms):
    """Semantic edit distance for every (a, b) item pair.

    cost_a/cost_b are precomputed boundary (delete/insert) cost vectors,
    flattened with the same offsets as the token arrays. Substitution costs
    are 1 - cosine(co-occurrence rows), memoized per call.
    """
    na = len(off_a) - 1
    nb = len(off_b) - 1
    out = np.empty((na, nb), dtype=np.float64)
    tok_a = [int(t) for t in tok_a]
    tok_b = [int(t) for t in tok_b]
    cost_a = [float(c) for c in cost_a]
    cost_b = [float(c) for c in cost_b]
    # plain lists: Python float arithmetic is IEEE double, same as the C kernel
    indptr = [int(v) for v in indptr]
    indices = [int(v) for v in indices]
    data = [float(v) for v in data]
    norms = [float(v) for v in norms]
    memo: dict[int, float] = {}
    V = len(norms)
    for p in range(na):
        a = tok_a[off_a[p]:off_a[p + 1]]
        da = cost_a[off_a[p]:off_a[p + 1]]
        for q in range(nb):
            b = tok_b[off_b[q]:off_b[q + 1]]
            ib = cost_b[off_b[q]:off_b[q + 1]]
            out[p, q] = _sed_pair(a, da, b, ib, indptr, indices, data, norms, memo, V)
    return out


def _sed_pair(a, da, b, ib, indptr, indices, data, norms, memo, V):
    n = len(a)
    m = len(b)
    if n == 0 or m == 0:
        total = 0.0
        for c in (ib if n == 0 else da):
            total += c
        return total
    prev = [0.0] * (m + 1)
    cur = [0.0] * (m + 1)
    for j in range(1, m + 1):
        prev[j] = prev[j - 1] + ib[j - 1]
    for i in range(1, n + 1):
        ai = a[i - 1]
        di = da[i - 1]
        cur[0] = prev[0] + di
        for j in range(1, m + 1):
            bj = b[j - 1]
            if ai == bj:
                sub = 0.0
            else:
                sub = 1.0 - _sim(ai, bj, indptr, indices, data, norms, memo, V)
            best = prev[j - 1] + sub
            t = prev[j] + di
            if t < best:
                best = t
            t = cur[j - 1] + ib[j - 1]
            if t < best:
                best = t
            cur[j] = best
        prev, cur = cur, prev
    return prev[m]


def _sim(x, y, indptr, indices, data, norms, memo, V):
    if x > y:
        x, y = y, x
    key = x * V + y
    cached = memo.get(key)
    if cached is not None:
        return cached
    nx = norms[x]
    ny = norms[y]
    if nx == 0.0 or ny == 0.0:
        value = 0.0
    else:
        i, iend = indptr[x], indptr[x + 1]
        j, jend = indptr[y], indptr[y + 1]
        dot = 0.0
        while i < iend and j < jend:
            ci = indices[i]
            cj = indices[j]
            if ci == cj:
                dot += data[i] * data[j]
                i += 1
                j += 1
            elif ci < cj:
                i += 1
            else:
                j += 1
        value = dot / (nx * ny)
        if value > 1.0:
            value = 1.0
    memo[key] = value
    return value
