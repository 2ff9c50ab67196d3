# distutils: language = c++
# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled DP kernels: unit edit distance and semantic edit distance.

Operation order mirrors _kernels_py so both backends emit bit-identical
matrices on the same platform.
"""

from cython.operator cimport dereference as deref
from libcpp.unordered_map cimport unordered_map

import numpy as np

cimport numpy as cnp

cnp.import_array()

COMPILED = True

# memo entries stop being added past this size; lookups keep working and
# values are recomputed, so results are unaffected
cdef long long MEMO_CAP = 50_000_000


cdef double _sim(long long x, long long y,
                 const long long[::1] indptr, const int[::1] indices,
                 const double[::1] data, const double[::1] norms,
                 unordered_map[long long, double] &memo, long long V) noexcept nogil:
    cdef long long tmp, key, i, iend, j, jend
    cdef int ci, cj
    cdef double nx, ny, dot, value
    if x > y:
        tmp = x; x = y; y = tmp
    key = x * V + y
    cdef unordered_map[long long, double].iterator it = memo.find(key)
    if it != memo.end():
        return deref(it).second
    nx = norms[x]
    ny = norms[y]
    if nx == 0.0 or ny == 0.0:
        value = 0.0
    else:
        i = indptr[x]; iend = indptr[x + 1]
        j = indptr[y]; jend = indptr[y + 1]
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
    if <long long> memo.size() < MEMO_CAP:
        memo[key] = value
    return value


cdef double _ed_pair(const int* a, long long n, const int* b, long long m,
                     double* prev, double* cur) noexcept nogil:
    cdef long long i, j
    cdef int ai
    cdef double best, t
    cdef double* swp
    if n == 0:
        return <double> m
    if m == 0:
        return <double> n
    for j in range(m + 1):
        prev[j] = <double> j
    for i in range(1, n + 1):
        cur[0] = <double> i
        ai = a[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] + (0.0 if ai == b[j - 1] else 1.0)
            t = prev[j] + 1.0
            if t < best:
                best = t
            t = cur[j - 1] + 1.0
            if t < best:
                best = t
            cur[j] = best
        swp = prev; prev = cur; cur = swp
    return prev[m]


cdef double _sed_pair(const int* a, const double* da, long long n,
                      const int* b, const double* ib, long long m,
                      const long long[::1] indptr, const int[::1] indices,
                      const double[::1] data, const double[::1] norms,
                      unordered_map[long long, double] &memo, long long V,
                      double* prev, double* cur) noexcept nogil:
    cdef long long i, j
    cdef int ai, bj
    cdef double di, sub, best, t, total
    cdef double* swp
    if n == 0 or m == 0:
        total = 0.0
        if n == 0:
            for j in range(m):
                total += ib[j]
        else:
            for i in range(n):
                total += da[i]
        return total
    prev[0] = 0.0
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
        swp = prev; prev = cur; cur = swp
    return prev[m]


def ed_matrix(const int[::1] tok_a, const long long[::1] off_a,
              const int[::1] tok_b, const long long[::1] off_b):
    """Unit-cost word-level edit distance for every (a, b) item pair."""
    cdef long long na = off_a.shape[0] - 1
    cdef long long nb = off_b.shape[0] - 1
    cdef cnp.ndarray[double, ndim=2] out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] om = out
    cdef long long p, q, maxm = 1
    for q in range(nb):
        if off_b[q + 1] - off_b[q] > maxm:
            maxm = off_b[q + 1] - off_b[q]
    cdef cnp.ndarray[double, ndim=1] rows = np.empty(2 * (maxm + 1), dtype=np.float64)
    cdef double* prev = <double*> cnp.PyArray_DATA(rows)
    cdef double* cur = prev + (maxm + 1)
    cdef const int* base_a = &tok_a[0] if tok_a.shape[0] else NULL
    cdef const int* base_b = &tok_b[0] if tok_b.shape[0] else NULL
    with nogil:
        for p in range(na):
            for q in range(nb):
                om[p, q] = _ed_pair(base_a + off_a[p], off_a[p + 1] - off_a[p],
                                    base_b + off_b[q], off_b[q + 1] - off_b[q],
                                    prev, cur)
    return out


def sed_matrix(const int[::1] tok_a, const long long[::1] off_a, const double[::1] cost_a,
               const int[::1] tok_b, const long long[::1] off_b, const double[::1] cost_b,
               const long long[::1] indptr, const int[::1] indices,
               const double[::1] data, const double[::1] norms):
    """Semantic edit distance for every (a, b) item pair.

    cost_a/cost_b are precomputed boundary (delete/insert) cost vectors
    flattened with the token offsets; substitution costs come from the
    co-occurrence CSR arrays, memoized per call.
    """
    cdef long long na = off_a.shape[0] - 1
    cdef long long nb = off_b.shape[0] - 1
    cdef long long V = norms.shape[0]
    cdef cnp.ndarray[double, ndim=2] out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] om = out
    cdef unordered_map[long long, double] memo
    cdef long long p, q, maxm = 1
    for q in range(nb):
        if off_b[q + 1] - off_b[q] > maxm:
            maxm = off_b[q + 1] - off_b[q]
    cdef cnp.ndarray[double, ndim=1] rows = np.empty(2 * (maxm + 1), dtype=np.float64)
    cdef double* prev = <double*> cnp.PyArray_DATA(rows)
    cdef double* cur = prev + (maxm + 1)
    cdef const int* base_a = &tok_a[0] if tok_a.shape[0] else NULL
    cdef const int* base_b = &tok_b[0] if tok_b.shape[0] else NULL
    cdef const double* cbase_a = &cost_a[0] if cost_a.shape[0] else NULL
    cdef const double* cbase_b = &cost_b[0] if cost_b.shape[0] else NULL
    with nogil:
        for p in range(na):
            for q in range(nb):
                om[p, q] = _sed_pair(
                    base_a + off_a[p], cbase_a + off_a[p], off_a[p + 1] - off_a[p],
                    base_b + off_b[q], cbase_b + off_b[q], off_b[q + 1] - off_b[q],
                    indptr, indices, data, norms, memo, V, prev, cur)
    return out
