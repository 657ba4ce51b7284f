"""Feedback loop walkthrough: labels drive seed pruning and threshold moves.

Run:  python3 demos/05_feedback_loop.py
"""

from trendguard import LabelBook, FeedbackLabel, Trend, decide_action, run_feedback_cycle
from trendguard.feedback import DEFAULT_TIERS, ActionTier, ControllerState
from trendguard.trends import TrendScore

HOUR = 3600.0

# Build a trend with two healthy seeds and one poisoned seed (it retrieves
# only content that moderators reject).
trend = Trend("trend-0042", "poisoned-seed demo")
for seed in ("seed-good-1", "seed-good-2", "seed-poisoned"):
    trend.add_seed(seed)
tiers = [ActionTier(name, bound) for name, bound in DEFAULT_TIERS]
book = LabelBook()


def simulate(seed_id, video_prefix, n_true, n_false):
    for i in range(n_true + n_false):
        video = f"{video_prefix}-{i:03d}"
        score = TrendScore(video, trend.trend_id, 0.9, seed_id, computed_at=HOUR)
        book.record_decision(decide_action(score, tiers))
        verdict = "true_positive" if i < n_true else "false_positive"
        book.ingest_label(FeedbackLabel(video, trend.trend_id, verdict, "moderator", HOUR))


simulate("seed-good-1", "g1", n_true=24, n_false=2)
simulate("seed-good-2", "g2", n_true=19, n_false=4)
simulate("seed-poisoned", "px", n_true=0, n_false=25)

controller = ControllerState()
for cycle in (1, 2):
    report = run_feedback_cycle(
        trend, tiers, book,
        window_end=2 * HOUR, prune_threshold=0.5, min_n=10,
        target_precision=0.8, controller=controller,
    )
    print(f"cycle {cycle}:")
    print("  per-seed precision:", {k: round(v, 3) for k, v in report.seed_precision.items()})
    print("  removed:", report.removed_seeds)
    print("  threshold changes:", report.threshold_changes)
    print("  warnings:", report.warnings)

print("\nsurviving seeds:", trend.seed_ids)
print("trend state:", trend.state)
print("tier bounds now:", [(t.name, round(t.lower_bound, 3)) for t in tiers])

# The last seed is never pruned; the trend pauses for human review instead.
lone = Trend("trend-0099", "last-seed guard")
lone.add_seed("only-seed")
lone_book = LabelBook()
for i in range(15):
    video = f"lone-{i:03d}"
    score = TrendScore(video, lone.trend_id, 0.85, "only-seed", computed_at=HOUR)
    lone_book.record_decision(decide_action(score, tiers))
    lone_book.ingest_label(FeedbackLabel(video, lone.trend_id, "false_positive", "moderator", HOUR))
report = run_feedback_cycle(lone, list(tiers), lone_book, window_end=2 * HOUR, prune_threshold=0.5, min_n=10)
print(f"\nlast-seed guard: removed={report.removed_seeds} paused={report.paused} state={lone.state}")
