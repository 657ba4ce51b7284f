"""Vector store walkthrough: normalization, cosine search, IVF partitioning.

Run:  python3 demos/01_vector_search.py
"""

import tempfile
from pathlib import Path

import numpy as np

from trendguard import (
    VectorStore,
    build_ivf,
    cosine,
    default_n_partitions,
    default_n_probe,
    load_vectors,
    normalize,
    save_vectors,
    search_ivf,
    top_k_exact,
)

rng = np.random.default_rng(7)

# Every stored vector is unit-norm float32; similarity is then just a dot
# product, accumulated in float64 and clamped to [-1, 1].
v = normalize([3.0, 4.0])
print("normalize([3, 4]) ->", v, "| norm:", np.linalg.norm(v))
print("cosine with x-axis:", cosine(np.float32([1, 0]), v))

# Build a store of clustered vectors, the shape real trend data takes.
dim, n_clusters, per_cluster = 32, 12, 400
centers = rng.normal(size=(n_clusters, dim))
centers /= np.linalg.norm(centers, axis=1, keepdims=True)
store = VectorStore(dim)
items = []
for c in range(n_clusters):
    noisy = centers[c] + rng.normal(0, 0.15, size=(per_cluster, dim))
    noisy /= np.linalg.norm(noisy, axis=1, keepdims=True)
    items.extend((f"c{c:02d}-{j:03d}", row.astype(np.float32)) for j, row in enumerate(noisy))
store.insert_many(items)
print(f"\nstore holds {len(store)} vectors of dimension {store.dim}")

# Exact top-k: scan everything, sort by similarity, ties by ascending id.
query = normalize(centers[3] + rng.normal(0, 0.15, size=dim))
for hit in top_k_exact(query, store, 5):
    print(f"  rank {hit.rank}: {hit.item_id}  sim={hit.similarity:.4f}")

# The IVF index trades a little recall for a lot less scanning: vectors are
# partitioned by spherical k-means and queries probe only the nearest cells.
n_part = default_n_partitions(len(store))
index = build_ivf(store, n_part)
n_probe = default_n_probe(n_part)
print(f"\nIVF: {index.n_partitions} partitions, probing {n_probe}")

exact_ids = [h.item_id for h in top_k_exact(query, store, 10)]
probed_ids = [h.item_id for h in search_ivf(index, query, 10, n_probe)]
print("recall@10 vs exact:", len(set(exact_ids) & set(probed_ids)) / 10)

# Probing every partition IS the exact search, bit for bit.
assert search_ivf(index, query, 10, index.n_partitions) == top_k_exact(query, store, 10)
print("full probe == exact search: True")

# Stores round-trip through a small binary format (magic, version, dim,
# count, then id + float32 records); the loader re-validates norms.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "vectors.ebrv"
    save_vectors(store, path)
    reloaded = load_vectors(path)
    print(f"\nround-trip through {path.name}: {len(reloaded)} vectors, ids preserved:",
          reloaded.ids == store.ids)
