"""Exact O(n^3) solver for the square linear assignment problem.

Potential-based Hungarian algorithm (shortest augmenting paths).  Handles
arbitrary real costs; deterministic: rows are assigned in index order and
ties resolve to the first column found in scan order.
"""

from __future__ import annotations

import numpy as np


def min_cost_assignment(cost: np.ndarray) -> np.ndarray:
    """Return ``col`` of row assignments minimizing ``sum cost[i, col[i]]``."""
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ValueError("cost matrix must be square")
    INF = np.inf
    # 1-based potentials; p[j] = row matched to column j (0 = none).
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, INF)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = -1
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    col = np.empty(n, dtype=int)
    for j in range(1, n + 1):
        col[p[j] - 1] = j - 1
    return col


def max_profit_assignment(profit: np.ndarray) -> tuple:
    """Maximize ``sum profit[i, col[i]]``; returns (value, col)."""
    profit = np.asarray(profit, dtype=float)
    col = min_cost_assignment(-profit)
    value = float(profit[np.arange(profit.shape[0]), col].sum())
    return value, col
