"""Trend retrieval and tiered actions: max-similarity scoring end to end.

Run:  python3 demos/04_retrieval_and_actions.py
"""

from trendguard import (
    SynthConfig,
    TrainConfig,
    Trend,
    decide_action,
    embed_dataset,
    gen_synthetic,
    retrieve_per_seed,
    retrieve_trend,
    score_video,
    train,
)
from trendguard.feedback import DEFAULT_TIERS, ActionTier

dataset = gen_synthetic(SynthConfig(n_trends=5, size_range=(80, 120), neg_per_pos=2.0, seed=4))
params, _ = train(dataset.positives, TrainConfig(epochs=10, batch_n=32, learning_rate=3e-3, seed=2), "single")
store = embed_dataset(dataset.records, params, "single")

# A trend is a seed set plus action tiers. Score = max cosine over seeds.
members = [r.item_id for r in dataset.records if r.label == 0]
trend = Trend("trend-0001", "demo trend")
for item in members[:4]:
    trend.add_seed(item)
print(f"trend {trend.trend_id} with seeds {trend.seed_ids}")

probe = store.get(members[10])
ts = score_video(probe, trend, store)
print(f"score_video({members[10]}): {ts.score:.4f} via seed {ts.best_seed_id}")

# Per-seed recall pulls top-k around one seed, excluding the trend's own
# seeds (retrieving a seed would be vacuous).
hits = retrieve_per_seed(trend.seed_ids[0], trend, store, k=5)
for h in hits:
    print(f"  {h.rank}. {h.item_id}  sim={h.similarity:.4f}")

# Trend retrieval unions the per-seed recalls and keeps each video's full
# max-over-seeds score.
candidates = retrieve_trend(trend, store, k_per_seed=50)
relevant = sum(1 for c in candidates[:50] if c.video_id.startswith("t000"))
print(f"\nretrieve_trend: {len(candidates)} candidates, top-50 precision {relevant / 50:.2f}")

# Tiers map similarity bands to actions; the highest cleared bound wins.
tiers = [ActionTier(name, bound) for name, bound in DEFAULT_TIERS]
print("\ntiers:", [(t.name, t.lower_bound) for t in tiers])
for candidate in (candidates[0], candidates[len(candidates) // 2], candidates[-1]):
    decision = decide_action(candidate, tiers)
    print(f"  {candidate.video_id}  score={candidate.score:.3f} -> tier={decision.tier}")
