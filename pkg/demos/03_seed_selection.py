"""Seed selection walkthrough: density clusters, centroids, historical gating.

Run:  python3 demos/03_seed_selection.py
"""

from trendguard import (
    SeedStats,
    SynthConfig,
    TrainConfig,
    centroid_proximity_seeds,
    dbscan,
    embed_dataset,
    gen_synthetic,
    historical_precision,
    select_historical_seeds,
    train,
)

# Embed a small corpus so the clusters are real embedding-space clusters.
dataset = gen_synthetic(SynthConfig(n_trends=4, size_range=(60, 80), neg_per_pos=0.5, seed=9))
params, _ = train(dataset.positives, TrainConfig(epochs=10, batch_n=32, learning_rate=3e-3, seed=1), "single")
store = embed_dataset(dataset.records, params, "single")

# DBSCAN in cosine distance (1 - cosine). Core points need min_pts
# neighbors within eps; noise stays unlabeled (-1).
assignment = dbscan(store, eps=0.25, min_pts=4)
print(f"found {assignment.n_clusters} clusters over {len(store)} embeddings")
for cid, cluster in enumerate(assignment.clusters()):
    labels = {m.split("-")[0] for m in cluster}
    print(f"  cluster {cid}: {len(cluster)} members, source trends {sorted(labels)}")
noise = sum(1 for l in assignment.labels.values() if l == -1)
print(f"  noise: {noise} items")

# Centroid proximity: the m members closest to the normalized cluster mean
# make strong seeds because they sit in the densest part of the trend.
seeds = centroid_proximity_seeds(store, assignment, 0, m=5)
print("\ncentroid-proximity seeds for cluster 0:", seeds)

# The historical gate keeps seeds whose windowed precision r/n is proven.
stats = [
    SeedStats("seed-a", 0.0, 86400.0, n=100, r=85),
    SeedStats("seed-b", 0.0, 86400.0, n=40, r=12),
    SeedStats("seed-c", 0.0, 86400.0, n=8, r=8),     # too few labels to trust
    SeedStats("seed-d", 0.0, 86400.0, n=60, r=57),
]
for s in stats:
    print(f"  {s.seed_id}: n={s.n} r={s.r} precision={historical_precision(s):.3f}")
accepted = select_historical_seeds(stats, precision_threshold=0.8, min_n=20)
print("accepted by the gate (p > 0.8, n >= 20):", accepted)
