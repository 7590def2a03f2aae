# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled kernels: greedy MMR selection and LCS length.

Semantics must stay identical to `_fallback`: first-index tie breaking,
first pick by query similarity alone, incremental max-to-selected updates.
The MMR kernel keeps BLAS for the per-pick similarity column (numpy matvec
beats a scalar loop at any realistic dim) and fuses the score/argmax/update
passes into one C loop, which is where the fallback spends its overhead.
"""

import numpy as np


def mmr_select(query_sims, matrix, int k, double lam):
    cdef double[::1] qsims = query_sims
    cdef Py_ssize_t n = qsims.shape[0]
    if n == 0 or k <= 0:
        return []
    if k > n:
        k = <int> n

    cdef double[::1] max_sel = np.zeros(n, dtype=np.float64)
    cdef unsigned char[::1] taken = np.zeros(n, dtype=np.uint8)
    cdef list out = []
    cdef Py_ssize_t i, pick
    cdef double best, score
    cdef double one_minus = 1.0 - lam
    cdef double[::1] col
    cdef int count

    pick = 0
    best = qsims[0]
    for i in range(1, n):
        if qsims[i] > best:
            best = qsims[i]
            pick = i
    taken[pick] = 1
    out.append(pick)
    col = matrix @ matrix[pick]
    for i in range(n):
        max_sel[i] = col[i]

    count = 1
    while count < k:
        pick = -1
        best = 0.0
        for i in range(n):
            if taken[i]:
                continue
            score = lam * qsims[i] - one_minus * max_sel[i]
            if pick < 0 or score > best:
                best = score
                pick = i
        taken[pick] = 1
        out.append(pick)
        count += 1
        if count < k:
            col = matrix @ matrix[pick]
            for i in range(n):
                if col[i] > max_sel[i]:
                    max_sel[i] = col[i]
    return out


def lcs_length(int[::1] a, int[::1] b):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    if n == 0 or m == 0:
        return 0

    cdef long[::1] prev = np.zeros(m + 1, dtype=np.int64)
    cdef long[::1] cur = np.zeros(m + 1, dtype=np.int64)
    cdef long[::1] tmp
    cdef Py_ssize_t i, j
    cdef long left, up

    for i in range(1, n + 1):
        cur[0] = 0
        for j in range(1, m + 1):
            if a[i - 1] == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                left = cur[j - 1]
                up = prev[j]
                cur[j] = left if left >= up else up
        tmp = prev
        prev = cur
        cur = tmp
    return int(prev[m])
