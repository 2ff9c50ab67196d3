"""Token co-occurrence counts and the cosine word-similarity they induce.

A pair of distinct token types co-occurring in one tweet counts once for that
tweet, regardless of multiplicity. The diagonal is excluded from counts;
similarity of a token with itself is defined as 1 directly, and a token whose
row is all zeros has similarity 0 against every other token.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import TraceItem, Vocabulary

_MAGIC = b"TSCO"
_VERSION = 1


class CooccurrenceMatrix:
    """Sparse symmetric nonnegative token-pair counts with cached row norms.

    The finished matrix is read-only; `similarity` is safe to call from many
    threads (the memo dict is only ever grown, which is atomic under the GIL).
    """

    def __init__(self, counts: sp.csr_matrix):
        counts = counts.tocsr()
        counts.sort_indices()
        self._counts = counts
        self.vocab_size = counts.shape[0]
        # norms are computed once here and shared with the compiled kernels,
        # so both backends divide by the exact same values
        squared = np.asarray(counts.multiply(counts).sum(axis=1), dtype=np.float64).ravel()
        self.row_norms = np.sqrt(squared)
        self._memo: dict[int, float] = {}

    @property
    def nnz(self) -> int:
        return int(self._counts.nnz)

    def count(self, x: int, y: int) -> int:
        return int(self._counts[x, y])

    def csr_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(indptr int64, indices int32, data float64, row_norms float64) views."""
        return (
            self._counts.indptr.astype(np.int64, copy=False),
            self._counts.indices.astype(np.int32, copy=False),
            self._counts.data.astype(np.float64, copy=False),
            self.row_norms,
        )

    def similarity(self, x: int, y: int) -> float:
        """Cosine of co-occurrence rows x and y; 1.0 if x == y, 0.0 for zero rows."""
        if x == y:
            return 1.0
        if x > y:
            x, y = y, x
        key = x * self.vocab_size + y
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        value = self._cosine(x, y)
        self._memo[key] = value
        return value

    def _cosine(self, x: int, y: int) -> float:
        nx = self.row_norms[x]
        ny = self.row_norms[y]
        if nx == 0.0 or ny == 0.0:
            return 0.0
        indptr = self._counts.indptr
        indices = self._counts.indices
        data = self._counts.data
        i, iend = indptr[x], indptr[x + 1]
        j, jend = indptr[y], indptr[y + 1]
        # sequential merge over sorted indices; the compiled kernel accumulates
        # in the same order, keeping both backends bit-identical
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
        value = float(dot / (nx * ny))
        return 1.0 if value > 1.0 else value

    def save(self, path: str | Path) -> str:
        """Write (V, nnz) header plus sorted (x, y, count) triples, little-endian.

        Only the upper triangle (x < y) is stored. A sidecar `<path>.sha256`
        holds the file checksum. Returns the hex digest.
        """
        path = Path(path)
        upper = sp.triu(self._counts, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        rows = upper.row[order].astype("<u4")
        cols = upper.col[order].astype("<u4")
        vals = upper.data[order].astype("<u8")
        buf = bytearray()
        buf += _MAGIC
        buf += struct.pack("<I", _VERSION)
        buf += struct.pack("<QQ", self.vocab_size, len(rows))
        triples = np.empty(len(rows), dtype=[("x", "<u4"), ("y", "<u4"), ("c", "<u8")])
        triples["x"] = rows
        triples["y"] = cols
        triples["c"] = vals
        buf += triples.tobytes()
        with open(path, "wb") as fh:
            fh.write(buf)
        digest = hashlib.sha256(buf).hexdigest()
        with open(path.with_suffix(path.suffix + ".sha256"), "w") as fh:
            fh.write(digest + "\n")
        return digest

    @classmethod
    def load(cls, path: str | Path) -> "CooccurrenceMatrix":
        path = Path(path)
        raw = path.read_bytes()
        checksum_path = path.with_suffix(path.suffix + ".sha256")
        if checksum_path.exists():
            expected = checksum_path.read_text().strip()
            actual = hashlib.sha256(raw).hexdigest()
            if actual != expected:
                raise ValueError(f"checksum mismatch for {path}: {actual} != {expected}")
        if raw[:4] != _MAGIC:
            raise ValueError(f"{path} is not a co-occurrence file")
        version, = struct.unpack_from("<I", raw, 4)
        if version != _VERSION:
            raise ValueError(f"unsupported co-occurrence file version {version}")
        vocab_size, nnz = struct.unpack_from("<QQ", raw, 8)
        triples = np.frombuffer(raw, dtype=[("x", "<u4"), ("y", "<u4"), ("c", "<u8")],
                                count=nnz, offset=24)
        rows = triples["x"].astype(np.int64)
        cols = triples["y"].astype(np.int64)
        vals = triples["c"].astype(np.int64)
        counts = sp.coo_matrix(
            (np.concatenate([vals, vals]),
             (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(vocab_size, vocab_size),
        ).tocsr()
        return cls(counts)


def build_cooccurrence(items: Iterable[TraceItem], vocab: Vocabulary) -> CooccurrenceMatrix:
    """Count, for every tweet, each unordered pair of distinct token types once."""
    V = len(vocab)
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    pending = 0
    chunks: list[sp.csr_matrix] = []

    def flush():
        nonlocal pending
        if not xs:
            return
        r = np.concatenate(xs)
        c = np.concatenate(ys)
        chunk = sp.coo_matrix((np.ones(len(r), dtype=np.int64), (r, c)), shape=(V, V)).tocsr()
        chunks.append(chunk)
        xs.clear()
        ys.clear()
        pending = 0

    for item in items:
        types = np.unique(np.asarray(item.tokens, dtype=np.int64))
        n = len(types)
        if n < 2:
            continue
        iu, ju = np.triu_indices(n, k=1)
        a = types[iu]
        b = types[ju]
        xs.append(np.concatenate([a, b]))
        ys.append(np.concatenate([b, a]))
        pending += 2 * len(a)
        if pending >= 4_000_000:
            flush()
    flush()
    if chunks:
        total = chunks[0]
        for chunk in chunks[1:]:
            total = total + chunk
    else:
        total = sp.csr_matrix((V, V), dtype=np.int64)
    return CooccurrenceMatrix(total)


def word_similarity(matrix: CooccurrenceMatrix, x: int, y: int) -> float:
    """Cosine word similarity in [0, 1]; see CooccurrenceMatrix.similarity."""
    if not (0 <= x < matrix.vocab_size and 0 <= y < matrix.vocab_size):
        raise IndexError(f"token index out of range: {x}, {y}")
    return matrix.similarity(x, y)


def boundary_costs(tokens: Sequence[int], matrix: CooccurrenceMatrix) -> np.ndarray:
    """Deletion/insertion cost vector for a token sequence.

    Position i costs 1 - sim(t_i, t_{i-1}); the first position has no
    predecessor and costs 1.
    """
    n = len(tokens)
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out
    out[0] = 1.0
    for i in range(1, n):
        out[i] = 1.0 - matrix.similarity(tokens[i], tokens[i - 1])
    return out
