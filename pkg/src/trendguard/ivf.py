"""Inverted-file index: spherical k-means partitioning + probed search.

The index is a performance path only. Exact search is the reference
semantics, so `search_ivf` reuses the exact path's similarity helper and
ordering contract; probing all partitions reproduces `top_k_exact`
bitwise (every item belongs to exactly one partition).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyStore
from .store import RetrievalHit, VectorStore, rank_hits, similarities_for

MAX_KMEANS_ITERS = 25


@dataclass(frozen=True)
class IvfPartition:
    centroid: np.ndarray  # unit float32
    member_rows: np.ndarray  # int indices into the snapshot matrix
    member_ids: tuple[str, ...]


@dataclass(frozen=True)
class IvfIndex:
    partitions: tuple[IvfPartition, ...]
    snapshot: object  # the store snapshot the index was built against
    dim: int

    @property
    def n_partitions(self) -> int:
        return len(self.partitions)


def default_n_partitions(store_size: int) -> int:
    return max(1, int(round(np.sqrt(store_size))))


def default_n_probe(n_partitions: int) -> int:
    return max(1, n_partitions // 8)


def _farthest_point_seeds(matrix: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Farthest-point centroid seeding from a seeded random start.

    Distance is cosine distance, so "farthest" means minimal maximum
    cosine to the already-chosen seeds.
    """
    count = matrix.shape[0]
    chosen = [int(rng.integers(count))]
    max_cos = matrix @ matrix[chosen[0]]
    for _ in range(1, n):
        max_cos[chosen] = np.inf  # never re-pick a chosen point
        nxt = int(np.argmin(max_cos))
        chosen.append(nxt)
        max_cos = np.maximum(max_cos, matrix @ matrix[nxt])
    return np.asarray(chosen)


def build_ivf(store: VectorStore, n_partitions: int, *, seed: int = 0) -> IvfIndex:
    """Partition the store with Lloyd-style spherical k-means.

    Centroids are re-normalized every iteration, assignment is by maximum
    cosine, and iteration stops when assignments stabilize or after 25
    rounds. Deterministic for a fixed seed. Empty partitions are dropped.

    Raises:
        EmptyStore: nothing to index.
        ValueError: n_partitions outside [1, store size].
    """
    snap = store.snapshot()
    count = len(snap.ids)
    if count == 0:
        raise EmptyStore("cannot build an index over an empty store")
    if not 1 <= n_partitions <= count:
        raise ValueError(f"n_partitions must be in [1, {count}], got {n_partitions}")

    rng = np.random.default_rng(seed)
    matrix = snap.matrix.astype(np.float64)
    centroids = matrix[_farthest_point_seeds(matrix, n_partitions, rng)].copy()

    assignment = np.full(count, -1, dtype=np.int64)
    for _ in range(MAX_KMEANS_ITERS):
        sims = matrix @ centroids.T  # (count, n_partitions)
        new_assignment = np.argmax(sims, axis=1)
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for c in range(n_partitions):
            members = matrix[assignment == c]
            if members.shape[0] == 0:
                continue  # keep the stale centroid; dropped at the end if still empty
            mean = members.mean(axis=0)
            norm = np.linalg.norm(mean)
            if norm > 1e-12:
                centroids[c] = mean / norm

    partitions = []
    for c in range(n_partitions):
        rows = np.flatnonzero(assignment == c)
        if rows.size == 0:
            continue
        partitions.append(
            IvfPartition(
                centroid=centroids[c].astype(np.float32),
                member_rows=rows,
                member_ids=tuple(snap.ids[i] for i in rows),
            )
        )
    return IvfIndex(partitions=tuple(partitions), snapshot=snap, dim=store.dim)


def search_ivf(index: IvfIndex, query, k: int, n_probe: int) -> list[RetrievalHit]:
    """Exact top-k restricted to the n_probe partitions nearest the query.

    Same ordering contract as `top_k_exact`; probing every partition is
    bitwise-order identical to the exact search.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 1 <= n_probe <= index.n_partitions:
        raise ValueError(f"n_probe must be in [1, {index.n_partitions}], got {n_probe}")
    query64 = np.asarray(query, dtype=np.float64).reshape(-1)
    snap = index.snapshot
    centroid_sims = np.stack([p.centroid.astype(np.float64) for p in index.partitions]) @ query64
    probe_order = np.argsort(-centroid_sims, kind="stable")[:n_probe]
    rows = np.concatenate([index.partitions[p].member_rows for p in probe_order])
    ids = [snap.ids[i] for i in rows]
    sims = similarities_for(snap, rows, query64)
    return rank_hits(ids, sims, k)
