"""Set-to-set distances and the 1-nearest-neighbour two-sample accuracy."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .assignment import linear_sum_assignment

EMD_EXACT_LIMIT = 512


def _points(x):
    arr = np.asarray(getattr(x, "points", x), dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("point set must be a non-empty (M, d) array")
    return arr


SMALL_PAIR = 1 << 14


def chamfer(x, y):
    """Mean squared nearest-neighbour distance, summed over both directions."""
    a, b = _points(x), _points(y)
    if len(a) * len(b) <= SMALL_PAIR:
        d2 = cdist(a, b, "sqeuclidean")
        return float(np.mean(d2.min(1)) + np.mean(d2.min(0)))
    d_ab = cKDTree(b).query(a)[0]
    d_ba = cKDTree(a).query(b)[0]
    return float(np.mean(d_ab**2) + np.mean(d_ba**2))


def _chamfer_matrix(sets_a, sets_b, budget=1 << 22):
    """All-pairs chamfer for equal-size sets, a block of rows at a time."""
    a = np.stack([_points(s) for s in sets_a])
    b = np.stack([_points(s) for s in sets_b])
    n, ma, dim = a.shape
    m, mb, _ = b.shape
    rows = max(1, budget // (ma * m * mb * dim))
    out = np.empty((n, m))
    for i in range(0, n, rows):
        d2 = ((a[i:i + rows, :, None, None, :] - b[None, None]) ** 2).sum(-1)
        out[i:i + rows] = d2.min(3).mean(1) + d2.min(1).mean(2)
    return out


def emd(x, y, approximate=False, rng=None):
    """Average matched Euclidean distance under the optimal bijection.

    Sets above ``EMD_EXACT_LIMIT`` points need ``approximate=True``, which
    solves the exact problem on a random ``EMD_EXACT_LIMIT``-point subsample
    of each set.
    """
    a, b = _points(x), _points(y)
    if len(a) != len(b):
        raise ValueError(f"EMD needs equal cardinality, got {len(a)} and {len(b)}")
    if len(a) > EMD_EXACT_LIMIT:
        if not approximate:
            raise ValueError(f"{len(a)} points exceeds the exact EMD limit {EMD_EXACT_LIMIT}; pass approximate=True")
        rng = rng if rng is not None else np.random.default_rng(0)
        a = a[rng.choice(len(a), EMD_EXACT_LIMIT, replace=False)]
        b = b[rng.choice(len(b), EMD_EXACT_LIMIT, replace=False)]
    cost = cdist(a, b)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


METRICS = {"cd": chamfer, "emd": emd}


def _metric(metric):
    if callable(metric):
        return metric
    try:
        return METRICS[metric.lower()]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}") from None


def _uniform(sets_a, sets_b):
    shapes = {np.shape(getattr(s, "points", s)) for s in list(sets_a) + list(sets_b)}
    return len(shapes) == 1 and len(next(iter(shapes))) == 2 and next(iter(shapes))[0] <= 256


def distance_matrix(sets_a, sets_b, metric="cd", symmetric=False):
    """Pairwise set distances; with ``symmetric`` only the upper triangle is computed."""
    fn = _metric(metric)
    if fn is chamfer and len(sets_a) and len(sets_b) and _uniform(sets_a, sets_b):
        out = _chamfer_matrix(sets_a, sets_b)
        if symmetric:
            out = np.triu(out, 1)
            out = out + out.T
        return out
    n, m = len(sets_a), len(sets_b)
    out = np.zeros((n, m))
    for i in range(n):
        start = i + 1 if symmetric else 0
        for j in range(start, m):
            out[i, j] = fn(sets_a[i], sets_b[j])
    if symmetric:
        out = out + out.T
    return out


def one_nna(gen, ref, metric="cd", return_details=False):
    """Leave-one-out 1-NN accuracy (percent) of telling ``gen`` from ``ref``.

    The pooled sets are classified by their nearest other set; exact ties go
    to the lowest pooled index (``gen`` first, then ``ref``).
    """
    if len(gen) == 0 or len(ref) == 0:
        raise ValueError("both lists must be non-empty")
    pooled = list(gen) + list(ref)
    labels = np.array([0] * len(gen) + [1] * len(ref))
    d = distance_matrix(pooled, pooled, metric, symmetric=True)
    return one_nna_from_matrix(d, labels, return_details)


def one_nna_from_matrix(d, labels, return_details=False):
    d = np.array(d, dtype=np.float64)
    np.fill_diagonal(d, np.inf)
    nn = np.argmin(d, axis=1)
    correct = labels[nn] == labels
    acc = 100.0 * correct.mean()
    if return_details:
        return acc, nn, correct
    return acc


def nearest_manifold_gap(gen, ref):
    """Mean distance from each generated point to its nearest reference point."""
    a, b = _points(gen), _points(ref)
    return float(cKDTree(b).query(a)[0].mean())
