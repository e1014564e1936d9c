"""Exact linear assignment (Hungarian method with potentials, O(n^2 m))."""
from __future__ import annotations

import numpy as np


def linear_sum_assignment(cost):
    """Minimum-cost assignment of rows to columns.

    Returns ``(rows, cols)`` index arrays like :func:`scipy.optimize.linear_sum_assignment`.
    Rectangular inputs assign every row of the smaller side.  Ties are broken
    towards the lowest column index, so results are deterministic.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    if not np.isfinite(c).all():
        raise ValueError("cost matrix contains non-finite entries")
    transposed = c.shape[0] > c.shape[1]
    if transposed:
        c = c.T
    n, m = c.shape
    if n == 0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)

    # 1-based bookkeeping; column 0 is the virtual source of each augmentation
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    owner = np.zeros(m + 1, dtype=int)
    way = np.zeros(m + 1, dtype=int)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used[1:]
            reduced = c[i0 - 1] - u[i0] - v[1:]
            better = free & (reduced < minv[1:])
            minv[1:][better] = reduced[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            cols = np.flatnonzero(used)
            u[owner[cols]] += delta
            v[cols] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1

    cols = np.flatnonzero(owner[1:])
    rows = owner[1:][cols] - 1
    if transposed:
        rows, cols = cols, rows
    order = np.argsort(rows)
    return rows[order], cols[order]


def assignment_cost(cost):
    rows, cols = linear_sum_assignment(cost)
    return float(np.asarray(cost, dtype=np.float64)[rows, cols].sum())
