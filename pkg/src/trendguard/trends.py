"""Per-trend retrieval: seed-based candidate recall and max-cosine scoring.

A video's score for a trend is the maximum cosine similarity over the
trend's seeds; the seed attaining the max is recorded (ties go to the
ascending seed id). Seeds are excluded from their own trend's candidate
lists, since retrieving a seed is vacuous and would distort precision
statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import NoSeeds, UnknownItem, UnknownSeed, UnknownTrend
from .ivf import IvfIndex, search_ivf
from .seeds import SeedRecord
from .store import RetrievalHit, VectorStore, top_k_exact

DEFAULT_K_PER_SEED = 200


@dataclass
class Trend:
    trend_id: str
    name: str
    modality: str = "single"  # which embedding space scores this trend
    state: str = "active"  # active | paused | retired
    seed_ids: list[str] = field(default_factory=list)
    seed_provenance: dict[str, SeedRecord] = field(default_factory=dict)
    created_at: float = 0.0

    def add_seed(self, item_id: str, provenance: str = "manual", annotator: str | None = None) -> bool:
        """Attach a seed; idempotent per item. Returns True if newly added."""
        if item_id in self.seed_provenance:
            return False
        self.seed_ids.append(item_id)
        self.seed_provenance[item_id] = SeedRecord(self.trend_id, item_id, provenance, annotator)
        return True

    def remove_seed(self, item_id: str) -> None:
        self.seed_ids.remove(item_id)
        del self.seed_provenance[item_id]


@dataclass(frozen=True)
class TrendScore:
    video_id: str
    trend_id: str
    score: float
    best_seed_id: str
    computed_at: float = 0.0


def register_manual_seed(
    trends: dict[str, Trend], store: VectorStore, trend_id: str, item_id: str, annotator: str
) -> SeedRecord:
    """Attach a moderator-contributed golden seed to a trend.

    Idempotent per (trend, item).

    Raises:
        UnknownTrend / UnknownItem: either side is missing.
    """
    if trend_id not in trends:
        raise UnknownTrend(trend_id)
    if item_id not in store:
        raise UnknownItem(item_id)
    trend = trends[trend_id]
    trend.add_seed(item_id, provenance="manual", annotator=annotator)
    return trend.seed_provenance[item_id]


def _seed_matrix(trend: Trend, store: VectorStore) -> np.ndarray:
    if not trend.seed_ids:
        raise NoSeeds(trend.trend_id)
    rows = []
    for seed_id in trend.seed_ids:
        if seed_id not in store:
            raise UnknownSeed(f"trend {trend.trend_id}: seed {seed_id} not in store")
        rows.append(store.get(seed_id).astype(np.float64))
    return np.stack(rows)


def score_video(video: np.ndarray, trend: Trend, store: VectorStore, *, computed_at: float = 0.0) -> TrendScore:
    """Max-cosine trend score for one embedded video."""
    seeds = _seed_matrix(trend, store)
    sims = seeds @ np.asarray(video, dtype=np.float64)
    np.clip(sims, -1.0, 1.0, out=sims)
    best = min(range(len(sims)), key=lambda i: (-sims[i], trend.seed_ids[i]))
    return TrendScore(
        video_id="",
        trend_id=trend.trend_id,
        score=float(sims[best]),
        best_seed_id=trend.seed_ids[best],
        computed_at=computed_at,
    )


def score_videos_batch(
    matrix: np.ndarray, video_ids: Sequence[str], trend: Trend, store: VectorStore, *, computed_at: float = 0.0
) -> list[TrendScore]:
    """Vectorized max-cosine scores for many videos at once."""
    seeds = _seed_matrix(trend, store)
    seed_ids = list(trend.seed_ids)
    seed_order = sorted(range(len(seed_ids)), key=lambda i: seed_ids[i])
    seeds = seeds[seed_order]
    ordered_ids = [seed_ids[i] for i in seed_order]
    sims = np.asarray(matrix, dtype=np.float64) @ seeds.T
    np.clip(sims, -1.0, 1.0, out=sims)
    best = np.argmax(sims, axis=1)  # first max = lowest seed id after the sort above
    return [
        TrendScore(
            video_id=video_ids[i],
            trend_id=trend.trend_id,
            score=float(sims[i, best[i]]),
            best_seed_id=ordered_ids[best[i]],
            computed_at=computed_at,
        )
        for i in range(len(video_ids))
    ]


def retrieve_per_seed(
    seed_id: str,
    trend: Trend,
    store: VectorStore,
    k: int = DEFAULT_K_PER_SEED,
    *,
    index: IvfIndex | None = None,
    n_probe: int | None = None,
) -> list[RetrievalHit]:
    """Top-k candidates around one seed, excluding the trend's own seeds.

    Exact search by default; an IVF index may serve the candidate recall,
    in which case similarity values are still exact cosines.
    """
    if seed_id not in trend.seed_ids:
        raise UnknownSeed(f"{seed_id} is not a seed of trend {trend.trend_id}")
    if seed_id not in store:
        raise UnknownSeed(f"seed {seed_id} not in store")
    query = store.get(seed_id)
    own = set(trend.seed_ids)
    fetch = k + len(own)  # enough headroom to drop the trend's own seeds
    if index is not None:
        hits = search_ivf(index, query, fetch, n_probe or index.n_partitions)
    else:
        hits = top_k_exact(query, store, fetch)
    kept = [h for h in hits if h.item_id not in own][:k]
    return [RetrievalHit(h.item_id, h.similarity, rank) for rank, h in enumerate(kept, start=1)]


def retrieve_trend(
    trend: Trend,
    store: VectorStore,
    k_per_seed: int = DEFAULT_K_PER_SEED,
    *,
    index: IvfIndex | None = None,
    n_probe: int | None = None,
    computed_at: float = 0.0,
) -> list[TrendScore]:
    """Union of per-seed retrievals, deduplicated by video keeping the max score.

    Every video in the union is scored against the full seed set (its trend
    score), so the reported value always equals score_video recomputed
    directly. Sorted by score descending, ties by ascending video id.
    """
    if not trend.seed_ids:
        raise NoSeeds(trend.trend_id)
    union: set[str] = set()
    for seed_id in sorted(trend.seed_ids):
        union.update(h.item_id for h in retrieve_per_seed(seed_id, trend, store, k_per_seed, index=index, n_probe=n_probe))
    video_ids = sorted(union)
    if not video_ids:
        return []
    matrix = np.stack([store.get(v) for v in video_ids])
    scores = score_videos_batch(matrix, video_ids, trend, store, computed_at=computed_at)
    scores.sort(key=lambda t: (-t.score, t.video_id))
    return scores


def evaluate_new_video(
    video_id: str,
    embeddings: dict[str, np.ndarray],
    trends: Iterable[Trend],
    stores: dict[str, VectorStore],
    *,
    computed_at: float = 0.0,
) -> list[TrendScore]:
    """Score one new video (already embedded per modality) against active trends.

    Paused and retired trends are skipped. Returns (unfiltered) scores for
    every active trend; the action layer decides which scores clear a tier.
    """
    out: list[TrendScore] = []
    for trend in trends:
        if trend.state != "active":
            continue
        if trend.modality not in embeddings:
            raise UnknownItem(f"no {trend.modality} embedding supplied for video {video_id}")
        ts = score_video(embeddings[trend.modality], trend, stores[trend.modality], computed_at=computed_at)
        out.append(TrendScore(video_id, ts.trend_id, ts.score, ts.best_seed_id, computed_at))
    return out
