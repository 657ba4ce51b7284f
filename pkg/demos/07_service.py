"""Service walkthrough: the event-sourced moderation loop over HTTP semantics.

Run:  python3 demos/07_service.py

This drives the service state object directly (same code the HTTP layer
calls). For the real server:  trendguard serve --config service.json
"""

import json
import tempfile
from pathlib import Path

from trendguard import SynthConfig, TrainConfig, gen_synthetic, save_manifest, train
from trendguard.service import ServiceConfig, ServiceState

tmp = Path(tempfile.mkdtemp())
dataset = gen_synthetic(SynthConfig(n_trends=3, size_range=(40, 60), neg_per_pos=1.0, dim=6, seed=5))
config = TrainConfig(epochs=5, batch_n=16, out_dim=16, hidden=12, d_model=8, learning_rate=3e-3, seed=0)
single, _ = train(dataset.positives, config, "single")
multi, _ = train(dataset.positives, config, "multimodal")
save_manifest({"single": single, "multimodal": multi}, tmp / "models.json")

state = ServiceState(ServiceConfig(data_dir=str(tmp / "data"), model_manifest=str(tmp / "models.json")))

# Ingest a slice of the corpus: each video is embedded in both spaces and
# the raw tokens land in the event log (replay recomputes embeddings).
members = [r for r in dataset.records if r.label == 0][:20]
negatives = dataset.negatives[:10]
for r in members + negatives:
    state.ingest_video({"id": r.item_id, "visual": r.visual.tolist(), "text": r.text.tolist(), "event_time": 3600.0})
print(f"ingested {len(members) + len(negatives)} videos, event log length {len(state.log)}")

# Create a trend, seed it, and backfill decisions over the stored corpus.
trend = state.create_trend({"name": "demo trend", "modality": "single"})
tid = trend["trend_id"]
state.add_seed(tid, {"item_id": members[0].item_id, "annotator": "demo"})
backfill = state.evaluate_trend(tid, {"event_time": 3600.0})
print(f"trend {tid}: {backfill['decisions_created']} decisions backfilled")

candidates = state.candidates(tid, k=50)["candidates"]
print("top candidates:")
for c in candidates[:5]:
    print(f"  {c['video_id']}  score={c['score']:.3f}  tier={c['tier']}  label={c['label']}")

# Label what moderators would see; ground truth makes members true positives.
member_ids = {r.item_id for r in members}
for c in candidates:
    if c["has_decision"]:
        verdict = "true_positive" if c["video_id"] in member_ids else "false_positive"
        state.ingest_feedback({"video_id": c["video_id"], "trend_id": tid, "verdict": verdict, "labeler": "demo"})

detail = state.trend_detail(tid)
seed_row = detail["seeds"][0]
print(f"\nseed stats after labeling: n={seed_row['n']} r={seed_row['r']} precision={seed_row['precision']}")

cycle = state.run_cycle(tid, {"window_end": 3600.0, "min_n": 5})
print("feedback cycle:", json.dumps({k: cycle[k] for k in ("seed_precision", "removed_seeds", "threshold_changes")}))

metrics = state.metrics()
print(f"\n/metrics totals: {metrics['totals']}")
print(f"state hash: {metrics['state_hash'][:16]}...")

# Replay proof: a second instance folds the same log into identical state.
replayed = ServiceState(ServiceConfig(data_dir=str(tmp / "data"), model_manifest=str(tmp / "models.json")))
print("replayed state hash equal:", replayed.state_hash() == metrics["state_hash"])
state.close()
replayed.close()
