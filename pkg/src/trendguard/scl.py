"""Supervised contrastive loss over a multiview batch, with analytic gradients.

For a batch of 2N embeddings z with integer labels y and temperature tau,
each anchor i contrasts against every other sample. With s_ij = z_i.z_j/tau
and P(i) = {p != i : y_p = y_i}:

    L = sum_i (-1/|P(i)|) sum_{p in P(i)} log( exp(s_ip) / sum_{a != i} exp(s_ia) )

The log-denominator is stabilized with per-anchor max subtraction so small
temperatures do not overflow. The value is not guaranteed non-negative in
general and is returned raw.

The loss is evaluable for any finite z (dot products are taken as given):
finite-difference checks perturb embeddings off the unit sphere, so the
unit-norm pre-condition is the caller's obligation, not a hard gate here.
"""

from __future__ import annotations

import numpy as np

from .errors import BadTemperature, NoPositives


def positive_mask(labels: np.ndarray) -> np.ndarray:
    """Boolean (2N, 2N) mask of P(i): same label, diagonal excluded.

    Raises:
        NoPositives: some anchor has an empty positive set.
    """
    labels = np.asarray(labels).reshape(-1)
    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    counts = same.sum(axis=1)
    if np.any(counts == 0):
        bad = int(np.flatnonzero(counts == 0)[0])
        raise NoPositives(f"anchor {bad} (label {labels[bad]!r}) has no positives")
    return same


def _prepare(z, labels, tau: float):
    if tau <= 0:
        raise BadTemperature(f"temperature must be > 0, got {tau}")
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] < 2:
        raise ValueError(f"need a (2N, D) batch with 2N >= 2, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("embeddings contain non-finite values")
    labels = np.asarray(labels).reshape(-1)
    if labels.shape[0] != z.shape[0]:
        raise ValueError(f"{labels.shape[0]} labels for {z.shape[0]} embeddings")
    pos = positive_mask(labels)
    logits = (z @ z.T) / tau
    # exclude self-similarity from every anchor's denominator
    np.fill_diagonal(logits, -np.inf)
    return z, pos, logits


def scl_loss(z, labels, tau: float) -> float:
    """Supervised contrastive loss (sum over anchors)."""
    _, pos, logits = _prepare(z, labels, tau)
    row_max = logits.max(axis=1, keepdims=True)
    log_denom = row_max[:, 0] + np.log(np.exp(logits - row_max).sum(axis=1))
    mean_pos_logit = np.where(pos, logits, 0.0).sum(axis=1) / pos.sum(axis=1)
    return float(np.sum(log_denom - mean_pos_logit))


def scl_loss_grad(z, labels, tau: float) -> np.ndarray:
    """Analytic gradient of scl_loss with respect to each embedding row.

    With pi_i(a) = softmax over anchor i's non-self logits and
    M[i, p] = 1/|P(i)| on positives, the gradient is

        dL/dZ = (1/tau) * ((Pi - M) + (Pi - M)^T) @ Z

    which matches central finite differences of scl_loss.
    """
    z, pos, logits = _prepare(z, labels, tau)
    row_max = logits.max(axis=1, keepdims=True)
    expl = np.exp(logits - row_max)
    softmax = expl / expl.sum(axis=1, keepdims=True)
    pos_weight = pos / pos.sum(axis=1, keepdims=True)
    a = softmax - pos_weight
    return ((a + a.T) @ z) / tau


def ntxent_labels(n_sources: int) -> np.ndarray:
    """Labels that reduce SCL to NT-Xent: each source index is its own class.

    Use with a batch laid out as [view1 of all sources, view2 of all sources],
    so exactly the augmented twin is positive for every anchor.
    """
    return np.tile(np.arange(n_sources), 2)
