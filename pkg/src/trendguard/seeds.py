"""Seed selection: density clustering, centroid proximity, historical gating.

Distance for clustering is cosine distance (1 - cosine), which lives in
[0, 2] for unit vectors. DBSCAN follows the classical single-pass
semantics with a fully deterministic expansion order: points are scanned
in ascending item id, clusters expand breadth-first, and a border point
belongs to the first cluster that reaches it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyStore, EmptyWindow, UnknownCluster, ZeroVector
from .store import VectorStore
from .vectors import normalize

NOISE = -1


@dataclass(frozen=True)
class ClusterAssignment:
    """Per-item cluster labels; ids >= 0 are clusters, NOISE (-1) is noise."""

    labels: dict[str, int]
    eps: float
    min_pts: int

    @property
    def n_clusters(self) -> int:
        return max((l for l in self.labels.values() if l != NOISE), default=-1) + 1

    def members(self, cluster_id: int) -> list[str]:
        found = sorted(i for i, l in self.labels.items() if l == cluster_id)
        if not found:
            raise UnknownCluster(f"cluster {cluster_id} not in assignment")
        return found

    def clusters(self) -> list[set[str]]:
        out: list[set[str]] = [set() for _ in range(self.n_clusters)]
        for item, label in self.labels.items():
            if label != NOISE:
                out[label].add(item)
        return out


@dataclass(frozen=True)
class SeedStats:
    """Windowed retrieval counts for one seed: n retrieved, r true positives."""

    seed_id: str
    window_start: float
    window_end: float
    n: int
    r: int

    def __post_init__(self):
        if self.window_end < self.window_start:
            raise ValueError("window end before window start")
        if not 0 <= self.r <= self.n:
            raise ValueError(f"need 0 <= r <= n, got r={self.r}, n={self.n}")


def dbscan(store: VectorStore, eps: float, min_pts: int) -> ClusterAssignment:
    """Density clustering over the store in cosine distance.

    A point is core iff it has >= min_pts neighbors within eps (itself
    included). Clusters are connected core points plus density-reachable
    border points.

    Raises:
        EmptyStore: nothing to cluster.
        ValueError: eps outside (0, 2] or min_pts < 1.
    """
    if not 0 < eps <= 2:
        raise ValueError(f"eps must be in (0, 2], got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    snap = store.snapshot()
    if not snap.ids:
        raise EmptyStore("dbscan over an empty store")

    # scan order and neighbor sets are both in ascending item id
    ordered = sorted(range(len(snap.ids)), key=lambda i: snap.ids[i])
    matrix = snap.matrix[ordered].astype(np.float64)
    ids = [snap.ids[i] for i in ordered]
    n = len(ids)

    gram = matrix @ matrix.T
    np.clip(gram, -1.0, 1.0, out=gram)
    within = (1.0 - gram) <= eps
    neighbor_lists = [np.flatnonzero(within[i]) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbor_lists])

    labels = np.full(n, NOISE, dtype=np.int64)
    assigned = np.zeros(n, dtype=bool)
    cluster = 0
    for start in range(n):
        if assigned[start] or not core[start]:
            continue
        queue = deque([start])
        assigned[start] = True
        labels[start] = cluster
        while queue:
            point = queue.popleft()
            if not core[point]:
                continue  # border points do not expand
            for nb in neighbor_lists[point]:
                if not assigned[nb]:
                    assigned[nb] = True
                    labels[nb] = cluster
                    queue.append(nb)
        cluster += 1
    return ClusterAssignment(labels={ids[i]: int(labels[i]) for i in range(n)}, eps=eps, min_pts=min_pts)


def centroid_proximity_seeds(
    store: VectorStore, assignment: ClusterAssignment, cluster_id: int, m: int
) -> list[str]:
    """The m cluster members closest (by cosine) to the cluster centroid.

    The centroid is the normalized mean of the members; ties break by
    ascending item id, and clusters smaller than m return whole.

    Raises:
        UnknownCluster: cluster id absent.
        ZeroVector: member mean is degenerate (antipodal cancellation).
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    members = assignment.members(cluster_id)
    vecs = np.stack([store.get(i).astype(np.float64) for i in members])
    centroid = normalize(vecs.mean(axis=0)).astype(np.float64)
    sims = vecs @ centroid
    order = sorted(range(len(members)), key=lambda i: (-sims[i], members[i]))
    return [members[i] for i in order[:m]]


def historical_precision(stats: SeedStats) -> float:
    """Windowed precision r/n for one seed.

    Raises:
        EmptyWindow: n = 0, precision undefined (the seed is not accepted).
    """
    if stats.n == 0:
        raise EmptyWindow(f"seed {stats.seed_id}: no retrievals in window")
    return stats.r / stats.n


def select_historical_seeds(
    candidates: Sequence[SeedStats], precision_threshold: float, min_n: int = 20
) -> list[str]:
    """Seeds whose windowed precision strictly exceeds the threshold.

    Candidates with n < min_n are skipped (precision over tiny n is noise).
    Output is sorted by precision descending, then seed id ascending.
    """
    accepted: list[tuple[float, str]] = []
    for stats in candidates:
        if stats.n < min_n or stats.n == 0:
            continue
        p = historical_precision(stats)
        if p > precision_threshold:
            accepted.append((p, stats.seed_id))
    accepted.sort(key=lambda pair: (-pair[0], pair[1]))
    return [seed_id for _, seed_id in accepted]


@dataclass
class SeedRecord:
    trend_id: str
    item_id: str
    provenance: str  # "manual" | "centroid" | "historical"
    annotator: str | None = None
