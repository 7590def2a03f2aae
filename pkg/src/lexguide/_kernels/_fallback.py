"""Pure-Python/numpy implementations of the hot kernels.

These mirror `_native` exactly: same greedy order, same first-index tie
breaking, same IEEE-double arithmetic per element.
"""

from __future__ import annotations

import numpy as np


def mmr_select(query_sims: np.ndarray, matrix: np.ndarray, k: int, lam: float) -> list[int]:
    """Greedy maximum-marginal-relevance selection.

    query_sims: (n,) cosine similarity of each candidate to the query.
    matrix: (n, d) unit-normalized candidate vectors.
    Picks up to k indices; each step maximizes
    lam * sim(candidate, query) - (1 - lam) * max sim(candidate, selected),
    except the first pick, which maximizes query similarity alone. Ties go
    to the smallest index.
    """
    n = int(query_sims.shape[0])
    if n == 0 or k <= 0:
        return []
    k = min(k, n)
    first = int(np.argmax(query_sims))
    selected = [first]
    alive = np.ones(n, dtype=bool)
    alive[first] = False
    max_to_selected = matrix @ matrix[first]
    while len(selected) < k:
        scores = lam * query_sims - (1.0 - lam) * max_to_selected
        scores[~alive] = -np.inf
        pick = int(np.argmax(scores))
        selected.append(pick)
        alive[pick] = False
        np.maximum(max_to_selected, matrix @ matrix[pick], out=max_to_selected)
    return selected


def lcs_length(a, b) -> int:
    """Length of the longest common subsequence of two int sequences."""
    a = list(a)
    b = list(b)
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    m = len(b)
    prev = [0] * (m + 1)
    for x in a:
        cur = [0] * (m + 1)
        for j in range(1, m + 1):
            if x == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            else:
                left = cur[j - 1]
                up = prev[j]
                cur[j] = left if left >= up else up
        prev = cur
    return prev[m]
