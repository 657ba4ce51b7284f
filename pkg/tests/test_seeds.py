import numpy as np
import pytest

from trendguard.errors import EmptyStore, EmptyWindow, UnknownCluster, UnknownItem, UnknownTrend
from trendguard.seeds import (
    NOISE,
    SeedStats,
    centroid_proximity_seeds,
    dbscan,
    historical_precision,
    select_historical_seeds,
)
from trendguard.store import VectorStore
from trendguard.trends import Trend, register_manual_seed
from trendguard.vectors import normalize

from conftest import random_unit_rows
from oracles import reference_dbscan


def angles_store(angles_deg):
    """2-D unit vectors at the given angles, ids in listed order."""
    store = VectorStore(2)
    items = []
    for i, a in enumerate(angles_deg):
        rad = np.deg2rad(a)
        items.append((f"p{i}", np.float32([np.cos(rad), np.sin(rad)])))
    store.insert_many(items)
    return store


def clusters_as_sets(assignment):
    return sorted(
        (sorted(members) for members in assignment.clusters()),
        key=lambda m: m[0],
    )


def oracle_clusters_as_sets(labels):
    groups = {}
    for item, label in labels.items():
        if label != NOISE:
            groups.setdefault(label, []).append(item)
    return sorted((sorted(m) for m in groups.values()), key=lambda m: m[0])


class TestDbscan:
    def test_hand_verified_angles(self):
        store = angles_store([0, 5, 90])
        eps = 1.0 - np.cos(np.deg2rad(10))
        result = dbscan(store, eps, min_pts=2)
        assert result.labels["p0"] == result.labels["p1"] != NOISE
        assert result.labels["p2"] == NOISE

    def test_min_pts_one_gives_connectivity_components(self, rng):
        store = angles_store([0, 5, 90, 95, 180])
        eps = 1.0 - np.cos(np.deg2rad(10))
        result = dbscan(store, eps, min_pts=1)
        assert result.labels["p0"] == result.labels["p1"]
        assert result.labels["p2"] == result.labels["p3"]
        assert result.labels["p0"] != result.labels["p2"]
        assert result.labels["p4"] not in (NOISE,)  # singleton cluster, still core
        assert sorted(set(result.labels.values())) == [0, 1, 2]

    def test_all_noise_when_sparse(self, rng):
        store = angles_store([0, 90, 180])
        result = dbscan(store, eps=0.01, min_pts=2)
        assert all(label == NOISE for label in result.labels.values())

    def test_empty_store(self):
        with pytest.raises(EmptyStore):
            dbscan(VectorStore(2), 0.5, 2)

    def test_parameter_validation(self):
        store = angles_store([0, 5])
        with pytest.raises(ValueError):
            dbscan(store, 0.0, 2)
        with pytest.raises(ValueError):
            dbscan(store, 2.5, 2)
        with pytest.raises(ValueError):
            dbscan(store, 0.5, 0)

    def test_matches_reference_on_random_instances(self, rng):
        for trial in range(40):
            n = int(rng.integers(5, 120))
            dim = int(rng.integers(2, 6))
            rows = random_unit_rows(rng, n, dim)
            ids = [f"i{j:04d}" for j in range(n)]
            store = VectorStore(dim)
            store.insert_many(list(zip(ids, rows)))
            eps = float(rng.uniform(0.02, 0.6))
            min_pts = int(rng.integers(1, 6))
            ours = dbscan(store, eps, min_pts)
            oracle = reference_dbscan(ids, rows, eps, min_pts)
            assert clusters_as_sets(ours) == oracle_clusters_as_sets(oracle), (
                f"trial {trial}: eps={eps}, min_pts={min_pts}"
            )
            noise_ours = {i for i, l in ours.labels.items() if l == NOISE}
            noise_oracle = {i for i, l in oracle.items() if l == NOISE}
            assert noise_ours == noise_oracle

    def test_permutation_invariant(self, rng):
        rows = random_unit_rows(rng, 60, 3)
        ids = [f"i{j:04d}" for j in range(60)]
        store = VectorStore(3)
        store.insert_many(list(zip(ids, rows)))
        base = dbscan(store, 0.3, 3)
        perm = rng.permutation(60)
        shuffled = VectorStore(3)
        shuffled.insert_many([(ids[i], rows[i]) for i in perm])
        again = dbscan(shuffled, 0.3, 3)
        assert base.labels == again.labels  # id-ordered expansion: fully identical


class TestCentroidProximity:
    def test_cluster_of_one(self):
        store = angles_store([0, 90])
        assignment = dbscan(store, eps=0.01, min_pts=1)
        cluster_of_p0 = assignment.labels["p0"]
        assert centroid_proximity_seeds(store, assignment, cluster_of_p0, 3) == ["p0"]

    def test_m_at_least_cluster_size_returns_whole_cluster(self):
        store = angles_store([0, 4, 8])
        assignment = dbscan(store, eps=1 - np.cos(np.deg2rad(10)), min_pts=2)
        seeds = centroid_proximity_seeds(store, assignment, 0, 10)
        assert sorted(seeds) == ["p0", "p1", "p2"]

    def test_matches_full_sort_oracle(self, rng):
        dim = 8
        center = normalize(rng.normal(size=dim)).astype(np.float64)
        store = VectorStore(dim)
        ids = []
        rows = []
        for j in range(100):
            v = center + rng.normal(0, 0.1, size=dim)
            v /= np.linalg.norm(v)
            ids.append(f"m{j:03d}")
            rows.append(v.astype(np.float32))
        store.insert_many(list(zip(ids, rows)))
        assignment = dbscan(store, eps=0.3, min_pts=3)
        assert assignment.n_clusters == 1
        seeds = centroid_proximity_seeds(store, assignment, 0, 5)

        matrix = np.stack([r.astype(np.float64) for r in rows])
        centroid = matrix.mean(axis=0)
        centroid /= np.linalg.norm(centroid)
        sims = matrix @ centroid
        oracle = [ids[i] for i in sorted(range(100), key=lambda i: (-sims[i], ids[i]))[:5]]
        assert seeds == oracle

    def test_prefix_property(self, rng):
        store = angles_store([0, 3, 6, 9, 12])
        assignment = dbscan(store, eps=1 - np.cos(np.deg2rad(20)), min_pts=2)
        for m in range(1, 5):
            shorter = centroid_proximity_seeds(store, assignment, 0, m)
            longer = centroid_proximity_seeds(store, assignment, 0, m + 1)
            assert longer[:m] == shorter

    def test_unknown_cluster(self):
        store = angles_store([0, 5])
        assignment = dbscan(store, 0.1, 1)
        with pytest.raises(UnknownCluster):
            centroid_proximity_seeds(store, assignment, 99, 2)


class TestHistoricalPrecision:
    def test_arithmetic(self):
        assert historical_precision(SeedStats("s", 0, 10, n=100, r=85)) == 0.85

    def test_zero_relevant(self):
        assert historical_precision(SeedStats("s", 0, 10, n=10, r=0)) == 0.0

    def test_empty_window(self):
        with pytest.raises(EmptyWindow):
            historical_precision(SeedStats("s", 0, 10, n=0, r=0))

    def test_invalid_counts_rejected(self):
        with pytest.raises(ValueError):
            SeedStats("s", 0, 10, n=5, r=6)
        with pytest.raises(ValueError):
            SeedStats("s", 10, 0, n=5, r=1)


class TestSelectHistoricalSeeds:
    def test_rule_application(self):
        stats = [SeedStats("s1", 0, 1, n=10, r=9), SeedStats("s2", 0, 1, n=10, r=5)]
        assert select_historical_seeds(stats, 0.8, min_n=5) == ["s1"]

    def test_threshold_is_strict(self):
        stats = [SeedStats("s1", 0, 1, n=10, r=8)]
        assert select_historical_seeds(stats, 0.8, min_n=5) == []

    def test_min_n_gate(self):
        stats = [SeedStats("s1", 0, 1, n=4, r=4)]
        assert select_historical_seeds(stats, 0.5, min_n=5) == []

    def test_matches_filter_sort_oracle(self, rng):
        stats = []
        for j in range(50):
            n = int(rng.integers(0, 60))
            r = int(rng.integers(0, n + 1)) if n else 0
            stats.append(SeedStats(f"s{j:02d}", 0, 1, n=n, r=r))
        threshold, min_n = 0.6, 20
        expected = sorted(
            ((s.r / s.n, s.seed_id) for s in stats if s.n >= min_n and s.r / s.n > threshold),
            key=lambda p: (-p[0], p[1]),
        )
        assert select_historical_seeds(stats, threshold, min_n) == [sid for _, sid in expected]

    def test_monotone_in_threshold(self, rng):
        stats = [
            SeedStats(f"s{j}", 0, 1, n=30, r=int(rng.integers(0, 31))) for j in range(30)
        ]
        previous = None
        for threshold in (0.1, 0.3, 0.5, 0.7, 0.9):
            accepted = set(select_historical_seeds(stats, threshold, min_n=10))
            if previous is not None:
                assert accepted <= previous
            previous = accepted


class TestManualSeeds:
    def test_registration_and_idempotency(self, rng):
        store = angles_store([0, 5, 90])
        trend = Trend("t1", "demo")
        trends = {"t1": trend}
        record = register_manual_seed(trends, store, "t1", "p0", annotator="alice")
        assert record.provenance == "manual"
        assert trend.seed_ids == ["p0"]
        register_manual_seed(trends, store, "t1", "p0", annotator="alice")
        assert trend.seed_ids == ["p0"]  # no change, still success

    def test_unknown_item(self):
        store = angles_store([0])
        with pytest.raises(UnknownItem):
            register_manual_seed({"t1": Trend("t1", "demo")}, store, "t1", "missing", "bob")

    def test_unknown_trend(self):
        store = angles_store([0])
        with pytest.raises(UnknownTrend):
            register_manual_seed({}, store, "t9", "p0", "bob")
