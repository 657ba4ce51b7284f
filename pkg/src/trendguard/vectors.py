"""Unit-norm embedding vectors and cosine similarity primitives.

Embedding vectors are plain float32 numpy arrays of a fixed dimension.
Storage stays in 32-bit floats; every similarity reduction accumulates in
64-bit so comparisons are stable, and results are clamped to [-1, 1]
because downstream threshold logic assumes the closed interval.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, ZeroVector

ZERO_NORM_EPS = 1e-12


def normalize(v) -> np.ndarray:
    """Scale a raw float vector to unit L2 norm, preserving direction.

    Accumulates the norm in float64 and returns float32.

    Raises:
        ZeroVector: if the L2 norm is <= 1e-12.
    """
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ZeroVector("vector has non-finite components")
    norm = float(np.linalg.norm(arr))
    if norm <= ZERO_NORM_EPS:
        raise ZeroVector(f"norm {norm!r} <= {ZERO_NORM_EPS}")
    return (arr / norm).astype(np.float32)


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Row-wise normalize; float32 out. Raises ZeroVector on any tiny row."""
    m = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(m, axis=-1, keepdims=True)
    if not np.all(np.isfinite(m)):
        raise ZeroVector("matrix has non-finite components")
    if np.any(norms <= ZERO_NORM_EPS):
        raise ZeroVector("at least one row has norm <= 1e-12")
    return (m / norms).astype(np.float32)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two unit vectors (their float64 dot product).

    Clamped to [-1, 1] after accumulation.

    Raises:
        DimensionMismatch: if the vectors differ in length.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    dot = float(np.dot(a.astype(np.float64), b.astype(np.float64)))
    return min(1.0, max(-1.0, dot))


def similarity_matrix(batch) -> np.ndarray:
    """Pairwise cosine matrix M[i][j] = cosine(v_i, v_j) for unit vectors.

    Computed as one float64 Gram matrix, clamped to [-1, 1].

    Raises:
        DimensionMismatch: empty batch or ragged dimensions.
    """
    vecs = list(batch)
    if not vecs:
        raise DimensionMismatch("similarity_matrix needs a non-empty batch")
    dim = len(vecs[0])
    if any(len(v) != dim for v in vecs):
        raise DimensionMismatch("vectors in batch differ in dimension")
    z = np.stack([np.asarray(v, dtype=np.float64) for v in vecs])
    gram = z @ z.T
    np.clip(gram, -1.0, 1.0, out=gram)
    return gram
