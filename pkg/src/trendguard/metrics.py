"""Ranking metrics: precision@k, ROC-AUC, PR-AUC, and best-F1.

All four are rank statistics over (score, relevant) pairs and are invariant
under strictly monotone transformations of the scores. Tie handling is
pinned exactly:

    precision_at_k  ties broken by stable input order
    roc_auc         Mann-Whitney with 0.5 credit per tied pair
    pr_auc          average-precision step sum over descending unique scores
    best_f1         thresholds swept at unique score values, ties -> lowest
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateLabels, EmptyInput


def _as_arrays(scores) -> tuple[np.ndarray, np.ndarray]:
    pairs = list(scores)
    if not pairs:
        raise EmptyInput("metric input is empty")
    s = np.asarray([p[0] for p in pairs], dtype=np.float64)
    y = np.asarray([bool(p[1]) for p in pairs])
    return s, y


def precision_at_k(scores, k: int) -> float:
    """Fraction of relevant items among the top k by score.

    k is capped at the list length; the capped value is the denominator.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    s, y = _as_arrays(scores)
    eff_k = min(k, len(s))
    top = np.argsort(-s, kind="stable")[:eff_k]
    return float(y[top].sum() / eff_k)


def roc_auc(scores) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie), by rank sums."""
    s, y = _as_arrays(scores)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("ROC-AUC needs at least one positive and one negative")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s), dtype=np.float64)
    sorted_scores = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _threshold_counts(s: np.ndarray, y: np.ndarray):
    """Cumulative TP/FP at each descending unique score threshold."""
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    cum_tp = np.cumsum(y_sorted)
    cum_fp = np.cumsum(~y_sorted)
    last_of_group = np.flatnonzero(np.diff(s_sorted) != 0)
    boundaries = np.append(last_of_group, len(s_sorted) - 1)
    return s_sorted[boundaries], cum_tp[boundaries], cum_fp[boundaries]


def pr_auc(scores) -> float:
    """Average precision: sum of (R_i - R_{i-1}) * P_i over unique thresholds."""
    s, y = _as_arrays(scores)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise DegenerateLabels("PR-AUC needs at least one positive")
    _, tp, fp = _threshold_counts(s, y)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


def best_f1(scores) -> tuple[float, float]:
    """Maximum F1 over thresholds at unique score values.

    Predicts positive at score >= threshold. Returns (f1, threshold); among
    tied maxima the lowest threshold wins.
    """
    s, y = _as_arrays(scores)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise DegenerateLabels("F1 needs at least one positive")
    thresholds, tp, fp = _threshold_counts(s, y)
    fn = n_pos - tp
    f1 = 2.0 * tp / (2.0 * tp + fp + fn)
    best = np.argmax(f1)  # first (highest-threshold) argmax
    ties = np.flatnonzero(f1 == f1[best])
    pick = ties[-1]  # thresholds descend, so the last tie is the lowest threshold
    return float(f1[pick]), float(thresholds[pick])
