"""Threshold-tiered auto-actions and the label-driven feedback loop.

Tiers map similarity bands to actions; a decision lands in the highest
tier whose lower bound it clears (bounds are inclusive). Labels attribute
to the decision's best seed, windowed precision gates seed pruning, and a
small hysteresis controller nudges tier bounds toward a target precision.
Windows run on event time, never wall clock, so simulations replay
bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import MalformedTiers, NoLabeledCandidates, NoPriorDecision
from .seeds import SeedStats
from .trends import Trend, TrendScore

TIER_ORDER = ("flag_review", "restrict", "escalate")
DEFAULT_TIERS = (("flag_review", 0.70), ("restrict", 0.80), ("escalate", 0.90))
DEFAULT_WINDOW_SECONDS = 24 * 3600.0

CONTROLLER_STEP = 0.01
CONTROLLER_SLACK = 0.05
BOUND_MIN, BOUND_MAX = 0.5, 0.99


@dataclass(frozen=True)
class ActionTier:
    name: str
    lower_bound: float


@dataclass(frozen=True)
class ActionDecision:
    video_id: str
    trend_id: str
    score: float
    tier: str | None  # None when the score clears no tier
    best_seed_id: str
    decided_at: float


@dataclass(frozen=True)
class FeedbackLabel:
    video_id: str
    trend_id: str
    verdict: str  # "true_positive" | "false_positive"
    labeler: str
    labeled_at: float


def validate_tiers(tiers: Sequence[ActionTier]) -> list[ActionTier]:
    """Check tier names and the strict flag < restrict < escalate ordering."""
    if not tiers:
        raise MalformedTiers("at least one tier required")
    by_name = {}
    for tier in tiers:
        if tier.name not in TIER_ORDER:
            raise MalformedTiers(f"unknown tier name {tier.name!r}")
        if tier.name in by_name:
            raise MalformedTiers(f"duplicate tier {tier.name!r}")
        if not -1.0 <= tier.lower_bound <= 1.0:
            raise MalformedTiers(f"tier bound {tier.lower_bound} outside [-1, 1]")
        by_name[tier.name] = tier
    ordered = [by_name[name] for name in TIER_ORDER if name in by_name]
    for lo, hi in zip(ordered, ordered[1:]):
        if not lo.lower_bound < hi.lower_bound:
            raise MalformedTiers(f"{lo.name} bound must be strictly below {hi.name}")
    return ordered


def min_tier_bound(tiers: Sequence[ActionTier]) -> float:
    return validate_tiers(tiers)[0].lower_bound


def decide_action(score: TrendScore, tiers: Sequence[ActionTier]) -> ActionDecision:
    """Assign the highest qualifying tier (inclusive lower bound), else None."""
    ordered = validate_tiers(tiers)
    chosen = None
    for tier in ordered:  # ascending severity; the last qualifying wins
        if score.score >= tier.lower_bound:
            chosen = tier.name
    return ActionDecision(
        video_id=score.video_id,
        trend_id=score.trend_id,
        score=score.score,
        tier=chosen,
        best_seed_id=score.best_seed_id,
        decided_at=score.computed_at,
    )


@dataclass
class LabelBook:
    """Per-trend decision log and label state with replacement semantics."""

    decisions: dict[str, ActionDecision] = field(default_factory=dict)  # by video id
    verdicts: dict[str, FeedbackLabel] = field(default_factory=dict)
    audit: list[tuple[FeedbackLabel, str | None]] = field(default_factory=list)

    def record_decision(self, decision: ActionDecision) -> None:
        self.decisions[decision.video_id] = decision

    def ingest_label(self, label: FeedbackLabel) -> ActionDecision:
        """Apply one label; relabeling replaces the prior verdict (audited).

        Raises:
            NoPriorDecision: no decision exists for the labeled video.
        """
        if label.verdict not in ("true_positive", "false_positive"):
            raise ValueError(f"bad verdict {label.verdict!r}")
        decision = self.decisions.get(label.video_id)
        if decision is None:
            raise NoPriorDecision(f"no decision for video {label.video_id} in trend {label.trend_id}")
        prior = self.verdicts.get(label.video_id)
        self.audit.append((label, prior.verdict if prior else None))
        self.verdicts[label.video_id] = label
        return decision

    def seed_stats(self, window_start: float, window_end: float) -> dict[str, SeedStats]:
        """Windowed (n, r) per seed over labeled decisions, keyed by best seed.

        A decision is in the window when its event time is; n counts labeled
        decisions, r the true positives among them.
        """
        counts: dict[str, list[int]] = {}
        for video_id, label in self.verdicts.items():
            decision = self.decisions[video_id]
            if not window_start <= decision.decided_at <= window_end:
                continue
            n_r = counts.setdefault(decision.best_seed_id, [0, 0])
            n_r[0] += 1
            if label.verdict == "true_positive":
                n_r[1] += 1
        return {
            seed: SeedStats(seed_id=seed, window_start=window_start, window_end=window_end, n=n, r=r)
            for seed, (n, r) in counts.items()
        }

    def labeled_decisions_in_window(self, window_start: float, window_end: float) -> list[tuple[ActionDecision, FeedbackLabel]]:
        out = []
        for video_id, label in self.verdicts.items():
            decision = self.decisions[video_id]
            if window_start <= decision.decided_at <= window_end:
                out.append((decision, label))
        return out


def ingest_label(label: FeedbackLabel, book: LabelBook, window_start: float, window_end: float) -> SeedStats:
    """Record a label and return the affected seed's updated windowed stats."""
    decision = book.ingest_label(label)
    stats = book.seed_stats(window_start, window_end)
    return stats.get(
        decision.best_seed_id,
        SeedStats(decision.best_seed_id, window_start, window_end, 0, 0),
    )


@dataclass
class ControllerState:
    """Hysteresis memory for the threshold controller."""

    consecutive_high: int = 0


@dataclass
class FeedbackReport:
    trend_id: str
    window: tuple[float, float]
    seed_precision: dict[str, float]
    removed_seeds: list[str]
    paused: bool
    threshold_changes: list[tuple[str, float, float]]  # (tier, old, new)
    warnings: list[str]


def _adjust_tiers(tiers: list[ActionTier], step: float) -> list[ActionTier] | None:
    moved = [
        ActionTier(t.name, min(BOUND_MAX, max(BOUND_MIN, round(t.lower_bound + step, 10))))
        for t in tiers
    ]
    try:
        return validate_tiers(moved)
    except MalformedTiers:
        return None  # clamping collapsed the ordering; skip this step


def run_feedback_cycle(
    trend: Trend,
    tiers: list[ActionTier],
    book: LabelBook,
    *,
    window_end: float,
    window_seconds: float = DEFAULT_WINDOW_SECONDS,
    prune_threshold: float = 0.5,
    min_n: int = 20,
    target_precision: float = 0.8,
    controller: ControllerState | None = None,
) -> FeedbackReport:
    """One feedback pass: prune low-precision seeds, then adjust tier bounds.

    Seeds with n >= min_n and windowed precision below prune_threshold are
    removed, except that the last seed is never removed: the trend is
    paused for human review instead. The controller raises all bounds by
    0.01 when windowed flag-tier precision is under target, and lowers by
    0.01 after two consecutive cycles above target + 0.05.

    Mutates `trend` (seed removal / pause) and `tiers` is returned adjusted
    via the report; the caller owns persisting both.
    """
    controller = controller if controller is not None else ControllerState()
    window_start = window_end - window_seconds
    warnings: list[str] = []
    stats = book.seed_stats(window_start, window_end)

    precisions: dict[str, float] = {}
    failing: list[str] = []
    for seed_id in sorted(trend.seed_ids):
        seed_stats = stats.get(seed_id)
        if seed_stats is None or seed_stats.n < min_n:
            continue
        p = seed_stats.r / seed_stats.n
        precisions[seed_id] = p
        if p < prune_threshold:
            failing.append(seed_id)

    removed: list[str] = []
    paused = False
    if failing:
        survivors = [s for s in trend.seed_ids if s not in failing]
        if not survivors:
            # keep the least-bad seed, pause the trend for human review
            keep = min(failing, key=lambda s: (-precisions[s], s))
            failing = [s for s in failing if s != keep]
            paused = True
            trend.state = "paused"
            warnings.append(
                f"trend {trend.trend_id}: all seeds below precision threshold; "
                f"kept {keep} and paused for human review"
            )
        for seed_id in failing:
            trend.remove_seed(seed_id)
            removed.append(seed_id)

    changes: list[tuple[str, float, float]] = []
    labeled = book.labeled_decisions_in_window(window_start, window_end)
    actioned = [(d, l) for d, l in labeled if d.tier is not None]
    if not actioned:
        warnings.append("no labeled actioned decisions in window; thresholds unchanged")
        controller.consecutive_high = 0
    else:
        flag_precision = sum(1 for _, l in actioned if l.verdict == "true_positive") / len(actioned)
        step = 0.0
        if flag_precision < target_precision:
            step = CONTROLLER_STEP
            controller.consecutive_high = 0
        elif flag_precision > target_precision + CONTROLLER_SLACK:
            controller.consecutive_high += 1
            if controller.consecutive_high >= 2:
                step = -CONTROLLER_STEP
                controller.consecutive_high = 0
        else:
            controller.consecutive_high = 0
        if step != 0.0:
            adjusted = _adjust_tiers(tiers, step)
            if adjusted is None:
                warnings.append("controller step skipped: clamping would break tier ordering")
            else:
                for old, new in zip(tiers, adjusted):
                    if old.lower_bound != new.lower_bound:
                        changes.append((old.name, old.lower_bound, new.lower_bound))
                tiers[:] = adjusted

    return FeedbackReport(
        trend_id=trend.trend_id,
        window=(window_start, window_end),
        seed_precision=precisions,
        removed_seeds=removed,
        paused=paused,
        threshold_changes=changes,
        warnings=warnings,
    )


def trend_precision_at_k(
    candidates: Sequence[TrendScore], k: int, labels: Mapping[str, str]
) -> float:
    """Labeled precision among the top k candidates by score.

    Unlabeled candidates count in neither numerator nor denominator.

    Raises:
        NoLabeledCandidates: none of the top k carry a verdict.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = sorted(candidates, key=lambda t: (-t.score, t.video_id))[:k]
    verdicts = [labels[c.video_id] for c in ranked if c.video_id in labels]
    if not verdicts:
        raise NoLabeledCandidates(f"no labeled candidates in top {k}")
    return sum(1 for v in verdicts if v == "true_positive") / len(verdicts)
