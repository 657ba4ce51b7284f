"""Independent reference implementations used as test oracles.

Everything here is deliberately naive (loops, brute force, no shared code
with the package paths under test) so agreement is meaningful.
"""

from __future__ import annotations

import math

import numpy as np


def naive_scl_loss(z: np.ndarray, labels, tau: float) -> float:
    """Direct double-summation contrastive loss, no stabilization."""
    z = np.asarray(z, dtype=np.float64)
    labels = list(labels)
    n = z.shape[0]
    total = 0.0
    for i in range(n):
        positives = [p for p in range(n) if p != i and labels[p] == labels[i]]
        denom = 0.0
        for a in range(n):
            if a != i:
                denom += math.exp(float(z[i] @ z[a]) / tau)
        inner = 0.0
        for p in positives:
            inner += math.log(math.exp(float(z[i] @ z[p]) / tau) / denom)
        total += -inner / len(positives)
    return total


def ntxent_reference(z: np.ndarray, tau: float) -> float:
    """Twin-only contrastive loss, summed over anchors.

    Expects the batch laid out as [view1 of N sources, view2 of N sources],
    so anchor i's twin sits at (i + N) mod 2N.
    """
    z = np.asarray(z, dtype=np.float64)
    two_n = z.shape[0]
    n = two_n // 2
    total = 0.0
    for i in range(two_n):
        twin = (i + n) % two_n
        denom = sum(math.exp(float(z[i] @ z[a]) / tau) for a in range(two_n) if a != i)
        total += -math.log(math.exp(float(z[i] @ z[twin]) / tau) / denom)
    return total


def central_difference_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function, component by component."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + h
        hi = f(x)
        xf[i] = orig - h
        lo = f(x)
        xf[i] = orig
        flat[i] = (hi - lo) / (2.0 * h)
    return grad


def grad_max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max-norm relative disagreement between two gradients."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-8)
    return float(np.abs(analytic - numeric).max() / scale)


def full_scan_top_k(ids, matrix: np.ndarray, query: np.ndarray, k: int):
    """Sort-everything top-k oracle: [(id, similarity)] sorted desc, ties by id."""
    sims = [float(np.asarray(row, dtype=np.float64) @ np.asarray(query, dtype=np.float64)) for row in matrix]
    sims = [min(1.0, max(-1.0, s)) for s in sims]
    order = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))
    return [(ids[i], sims[i]) for i in order[:k]]


def reference_dbscan(ids, matrix: np.ndarray, eps: float, min_pts: int) -> dict[str, int]:
    """Independent DBSCAN: union-find over core points, borders to the
    earliest-discovered cluster (clusters ordered by their minimum core id).
    """
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    matrix = np.asarray(matrix, dtype=np.float64)[order]
    ids = [ids[i] for i in order]
    n = len(ids)
    dist = 1.0 - np.clip(matrix @ matrix.T, -1.0, 1.0)
    neighbors = [set(np.flatnonzero(dist[i] <= eps).tolist()) for i in range(n)]
    core = [len(neighbors[i]) >= min_pts for i in range(n)]

    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    for i in range(n):
        if not core[i]:
            continue
        for j in neighbors[i]:
            if core[j]:
                union(i, j)

    # clusters keyed by their minimal core index, numbered in that order
    roots = sorted({find(i) for i in range(n) if core[i]})
    cluster_of_root = {root: c for c, root in enumerate(roots)}
    labels = {}
    for i in range(n):
        if core[i]:
            labels[ids[i]] = cluster_of_root[find(i)]
    for i in range(n):
        if core[i]:
            continue
        reachable = [cluster_of_root[find(j)] for j in neighbors[i] if core[j]]
        labels[ids[i]] = min(reachable) if reachable else -1
    return labels


def allpairs_roc_auc(pairs) -> float:
    pos = [s for s, rel in pairs if rel]
    neg = [s for s, rel in pairs if not rel]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def sweep_pr_auc(pairs) -> float:
    """Threshold-sweep average precision, recomputed from scratch per threshold."""
    scores = [s for s, _ in pairs]
    n_pos = sum(1 for _, rel in pairs if rel)
    thresholds = sorted(set(scores), reverse=True)
    area = 0.0
    prev_recall = 0.0
    for t in thresholds:
        tp = sum(1 for s, rel in pairs if s >= t and rel)
        fp = sum(1 for s, rel in pairs if s >= t and not rel)
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


def sweep_best_f1(pairs) -> tuple[float, float]:
    """Exhaustive F1 sweep; ties resolved toward the lowest threshold."""
    scores = [s for s, _ in pairs]
    n_pos = sum(1 for _, rel in pairs if rel)
    best = (-1.0, None)
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, rel in pairs if s >= t and rel)
        fp = sum(1 for s, rel in pairs if s >= t and not rel)
        fn = n_pos - tp
        f1 = 2 * tp / (2 * tp + fp + fn)
        if f1 >= best[0]:  # descending thresholds: >= drifts ties to the lowest
            best = (f1, t)
    return best
