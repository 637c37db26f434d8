"""Linear assignment helpers shared by SORT and the identity metrics."""
from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def hungarian(cost) -> list[tuple[int, int]]:
    """Minimum-cost assignment of rows to columns.

    Returns ``min(n, m)`` ``(row, col)`` pairs sorted by row. Costs must be
    finite; callers gate infeasible pairs afterwards.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError(f"cost must be 2-D, got shape {cost.shape}")
    if cost.size == 0:
        return []
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    rows, cols = linear_sum_assignment(cost)
    return [(int(r), int(c)) for r, c in zip(rows, cols)]


def assignment_cost(cost, pairs) -> float:
    cost = np.asarray(cost, dtype=float)
    return float(sum(cost[r, c] for r, c in pairs))


def gated_hungarian(similarity: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """Maximise total similarity over pairs with ``similarity >= threshold``.

    Pairs below the threshold are priced out with a large constant so the
    solver prefers more feasible matches, then dropped from the result.
    """
    similarity = np.asarray(similarity, dtype=float)
    if similarity.size == 0:
        return []
    feasible = similarity >= threshold
    if not feasible.any():
        return []
    big = 1e6
    cost = np.where(feasible, 1.0 - similarity, big)
    return [(r, c) for r, c in hungarian(cost) if feasible[r, c]]
