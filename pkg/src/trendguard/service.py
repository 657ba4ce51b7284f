"""HTTP/JSON service: ingestion, trend management, retrieval, actions, feedback.

State is event-sourced: every mutation appends to a JSON-lines log, and
full state is a pure fold over that log. Video embeddings are recomputed
deterministically from the token payloads carried in video_ingested
events, so a crash between vector-file flushes loses nothing; the binary
vector files are a startup cache, not the source of truth.

Concurrency: all mutations funnel through one writer lock that assigns
sequence numbers; store reads run against immutable snapshots. The
threshold controller's hysteresis counter is deliberately transient (it
is not an event), so a restart conservatively requires two fresh
high-precision cycles before lowering bounds.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import ConfigError, TrendGuardError, UnknownItem, UnknownTrend
from .events import EventLog
from .feedback import (
    DEFAULT_TIERS,
    DEFAULT_WINDOW_SECONDS,
    ActionDecision,
    ActionTier,
    ControllerState,
    FeedbackLabel,
    LabelBook,
    decide_action,
    run_feedback_cycle,
    trend_precision_at_k,
    validate_tiers,
)
from .store import VectorStore, load_vectors, save_vectors
from .training import Record, load_manifest
from .trends import Trend, TrendScore, retrieve_trend, score_video
from .errors import NoLabeledCandidates

MODALITIES = ("single", "multimodal")


@dataclass(frozen=True)
class ServiceConfig:
    listen_addr: str = "127.0.0.1:8321"
    data_dir: str = "./data"
    model_manifest: str = ""
    api_token: str = ""
    static_dir: str = ""
    window_seconds: float = DEFAULT_WINDOW_SECONDS
    prune_threshold: float = 0.5
    min_n: int = 20
    target_precision: float = 0.8


def load_service_config(path: str | None = None, env: dict | None = None) -> ServiceConfig:
    """Config file plus LISTEN_ADDR / DATA_DIR / MODEL_MANIFEST / API_TOKEN overrides."""
    env = os.environ if env is None else env
    values: dict[str, Any] = {}
    if path:
        try:
            values = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        unknown = set(values) - set(ServiceConfig.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for env_key, field_name in (
        ("LISTEN_ADDR", "listen_addr"),
        ("DATA_DIR", "data_dir"),
        ("MODEL_MANIFEST", "model_manifest"),
        ("API_TOKEN", "api_token"),
        ("STATIC_DIR", "static_dir"),
    ):
        if env.get(env_key):
            values[field_name] = env[env_key]
    config = ServiceConfig(**values)
    if not config.model_manifest:
        raise ConfigError("model_manifest is required (file from the training manifest writer)")
    return config


class ApiFault(Exception):
    """Error with an HTTP status and a machine-readable code."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _payload_hash(payload: dict) -> str:
    return hashlib.sha256(_canonical(payload).encode()).hexdigest()


@dataclass
class TrendEntry:
    trend: Trend
    tiers: list[ActionTier]
    book: LabelBook = field(default_factory=LabelBook)
    controller: ControllerState = field(default_factory=ControllerState)


class ServiceState:
    """Event-sourced service state. All mutations go through _record."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.encoders = load_manifest(config.model_manifest)
        embed_modes = [m for m in MODALITIES if m in self.encoders]
        if not embed_modes:
            raise ConfigError("manifest contains no single/multimodal encoder")
        self.modalities = tuple(embed_modes)
        dims = {m: self.encoders[m].out_dim for m in embed_modes}
        self.stores: dict[str, VectorStore] = {m: VectorStore(dims[m]) for m in embed_modes}
        self.trends: dict[str, TrendEntry] = {}
        self.video_payload_hash: dict[str, str] = {}
        self.video_tokens: dict[str, tuple] = {}
        self.action_counts: dict[str, int] = {"flag_review": 0, "restrict": 0, "escalate": 0}
        self.latencies_ms: list[float] = []
        self._write_lock = threading.RLock()
        self._vector_cache = self._load_vector_cache()
        self.log = EventLog(self.data_dir / "events.jsonl")
        for record in self.log:
            self._apply(record.kind, record.payload, record.event_time)
        self._vector_cache = {}

    # -- durability ---------------------------------------------------------

    def _vector_path(self, modality: str) -> Path:
        return self.data_dir / f"vectors.{modality}.ebrv"

    def _load_vector_cache(self) -> dict[str, dict[str, np.ndarray]]:
        cache: dict[str, dict[str, np.ndarray]] = {}
        for modality in self.modalities:
            path = self._vector_path(modality)
            if path.exists():
                store = load_vectors(path)
                cache[modality] = {i: store.get(i) for i in store.ids}
        return cache

    def flush_vectors(self) -> None:
        with self._write_lock:
            for modality in self.modalities:
                save_vectors(self.stores[modality], self._vector_path(modality))

    def close(self) -> None:
        self.log.close()

    # -- event fold ---------------------------------------------------------

    def _record(self, kind: str, payload: dict, event_time: float):
        record = self.log.append(kind, payload, event_time, received_at=time.time())
        self._apply(kind, payload, event_time)
        return record

    def _apply(self, kind: str, payload: dict, event_time: float) -> None:
        getattr(self, f"_apply_{kind}")(payload, event_time)

    def _embed(self, modality: str, visual, text) -> np.ndarray:
        record = Record(item_id="", label=0, visual=np.asarray(visual, dtype=np.float64),
                        text=np.asarray(text, dtype=np.float64))
        from .training import _encode_batch  # deterministic batched encoder

        return _encode_batch([record], self.encoders[modality], modality)[0]

    def _apply_video_ingested(self, payload: dict, event_time: float) -> None:
        vid = payload["id"]
        self.video_payload_hash[vid] = _payload_hash(payload)
        self.video_tokens[vid] = (payload["visual"], payload["text"])
        cached = self._vector_cache
        for modality in self.modalities:
            if modality in cached and vid in cached[modality]:
                vec = cached[modality][vid]
            else:
                vec = self._embed(modality, payload["visual"], payload["text"])
            self.stores[modality].insert(vid, vec)

    def _apply_trend_created(self, payload: dict, event_time: float) -> None:
        tiers = [ActionTier(t["name"], float(t["lower_bound"])) for t in payload["tiers"]]
        trend = Trend(
            trend_id=payload["trend_id"],
            name=payload["name"],
            modality=payload["modality"],
            created_at=event_time,
        )
        self.trends[trend.trend_id] = TrendEntry(trend=trend, tiers=validate_tiers(tiers))

    def _apply_seed_added(self, payload: dict, event_time: float) -> None:
        entry = self.trends[payload["trend_id"]]
        entry.trend.add_seed(payload["item_id"], payload.get("provenance", "manual"), payload.get("annotator"))

    def _apply_seed_removed(self, payload: dict, event_time: float) -> None:
        entry = self.trends[payload["trend_id"]]
        entry.trend.remove_seed(payload["item_id"])

    def _apply_decision(self, payload: dict, event_time: float) -> None:
        entry = self.trends[payload["trend_id"]]
        decision = ActionDecision(
            video_id=payload["video_id"],
            trend_id=payload["trend_id"],
            score=float(payload["score"]),
            tier=payload["tier"],
            best_seed_id=payload["best_seed_id"],
            decided_at=event_time,
        )
        entry.book.record_decision(decision)
        if decision.tier:
            self.action_counts[decision.tier] += 1

    def _apply_label(self, payload: dict, event_time: float) -> None:
        entry = self.trends[payload["trend_id"]]
        entry.book.ingest_label(
            FeedbackLabel(
                video_id=payload["video_id"],
                trend_id=payload["trend_id"],
                verdict=payload["verdict"],
                labeler=payload.get("labeler", ""),
                labeled_at=event_time,
            )
        )

    def _apply_threshold_changed(self, payload: dict, event_time: float) -> None:
        entry = self.trends[payload["trend_id"]]
        entry.tiers = validate_tiers(
            [ActionTier(t["name"], float(t["lower_bound"])) for t in payload["tiers"]]
        )

    def _apply_trend_paused(self, payload: dict, event_time: float) -> None:
        self.trends[payload["trend_id"]].trend.state = "paused"

    def _apply_trend_resumed(self, payload: dict, event_time: float) -> None:
        self.trends[payload["trend_id"]].trend.state = "active"

    # -- mutations ----------------------------------------------------------

    def _require_trend(self, trend_id: str) -> TrendEntry:
        if trend_id not in self.trends:
            raise ApiFault(404, "unknown_trend", f"trend {trend_id} does not exist")
        return self.trends[trend_id]

    @staticmethod
    def _validate_tokens(value, name: str) -> list[list[float]]:
        try:
            arr = np.asarray(value, dtype=np.float64)
        except (ValueError, TypeError):
            raise ApiFault(422, "malformed_tokens", f"{name} tokens must be numeric") from None
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1 or not np.all(np.isfinite(arr)):
            raise ApiFault(422, "malformed_tokens", f"{name} tokens must be a finite (T, d) matrix")
        return arr.tolist()

    def ingest_video(self, body: dict) -> dict:
        vid = body.get("id")
        if not isinstance(vid, str) or not vid:
            raise ApiFault(422, "malformed_tokens", "id must be a non-empty string")
        payload = {
            "id": vid,
            "visual": self._validate_tokens(body.get("visual"), "visual"),
            "text": self._validate_tokens(body.get("text"), "text"),
            "event_time": float(body.get("event_time", 0.0)),
        }
        with self._write_lock:
            if vid in self.video_payload_hash:
                if self.video_payload_hash[vid] == _payload_hash(payload):
                    return {"id": vid, "replay": True, "decisions": self._decisions_for(vid)}
                raise ApiFault(409, "duplicate_id", f"video {vid} already ingested with a different body")
            self._record("video_ingested", payload, payload["event_time"])
            decisions = []
            for trend_id in sorted(self.trends):
                entry = self.trends[trend_id]
                if entry.trend.state != "active" or not entry.trend.seed_ids:
                    continue
                modality = entry.trend.modality
                video_vec = self.stores[modality].get(vid)
                ts = score_video(video_vec, entry.trend, self.stores[modality], computed_at=payload["event_time"])
                ts = TrendScore(vid, ts.trend_id, ts.score, ts.best_seed_id, payload["event_time"])
                decision = decide_action(ts, entry.tiers)
                if decision.tier is not None:
                    self._record(
                        "decision",
                        {
                            "video_id": vid,
                            "trend_id": trend_id,
                            "score": decision.score,
                            "tier": decision.tier,
                            "best_seed_id": decision.best_seed_id,
                        },
                        payload["event_time"],
                    )
                    decisions.append(self._decision_view(decision))
            return {"id": vid, "embeddings_computed": list(self.modalities), "decisions": decisions}

    def _decision_view(self, decision: ActionDecision) -> dict:
        return {
            "video_id": decision.video_id,
            "trend_id": decision.trend_id,
            "score": decision.score,
            "tier": decision.tier,
            "best_seed_id": decision.best_seed_id,
            "decided_at": decision.decided_at,
        }

    def _decisions_for(self, vid: str) -> list[dict]:
        out = []
        for trend_id in sorted(self.trends):
            decision = self.trends[trend_id].book.decisions.get(vid)
            if decision is not None:
                out.append(self._decision_view(decision))
        return out

    def create_trend(self, body: dict) -> dict:
        name = body.get("name")
        if not isinstance(name, str) or not name:
            raise ApiFault(422, "bad_request", "name must be a non-empty string")
        modality = body.get("modality", self.modalities[0])
        if modality not in self.modalities:
            raise ApiFault(422, "bad_request", f"modality must be one of {self.modalities}")
        tiers = body.get("tiers") or [{"name": n, "lower_bound": b} for n, b in DEFAULT_TIERS]
        try:
            validate_tiers([ActionTier(t["name"], float(t["lower_bound"])) for t in tiers])
        except (TrendGuardError, KeyError, TypeError, ValueError) as exc:
            raise ApiFault(422, "malformed_tiers", str(exc)) from None
        with self._write_lock:
            trend_id = body.get("trend_id") or f"trend-{len(self.trends) + 1:04d}"
            if trend_id in self.trends:
                raise ApiFault(409, "duplicate_id", f"trend {trend_id} already exists")
            self._record(
                "trend_created",
                {"trend_id": trend_id, "name": name, "modality": modality, "tiers": tiers},
                float(body.get("event_time", 0.0)),
            )
            return self.trend_detail(trend_id)

    def add_seed(self, trend_id: str, body: dict) -> dict:
        item_id = body.get("item_id")
        if not isinstance(item_id, str) or not item_id:
            raise ApiFault(422, "bad_request", "item_id must be a non-empty string")
        with self._write_lock:
            entry = self._require_trend(trend_id)
            if item_id not in self.stores[entry.trend.modality]:
                raise ApiFault(404, "unknown_item", f"item {item_id} not in the {entry.trend.modality} store")
            if item_id not in entry.trend.seed_provenance:
                self._record(
                    "seed_added",
                    {
                        "trend_id": trend_id,
                        "item_id": item_id,
                        "provenance": body.get("provenance", "manual"),
                        "annotator": body.get("annotator"),
                    },
                    float(body.get("event_time", 0.0)),
                )
            return self.trend_detail(trend_id)

    def remove_seed(self, trend_id: str, item_id: str, event_time: float = 0.0) -> dict:
        with self._write_lock:
            entry = self._require_trend(trend_id)
            if item_id not in entry.trend.seed_provenance:
                raise ApiFault(404, "unknown_seed", f"{item_id} is not a seed of {trend_id}")
            if len(entry.trend.seed_ids) == 1:
                if entry.trend.state == "active":
                    self._record("trend_paused", {"trend_id": trend_id, "reason": "would_empty_seed_set"}, event_time)
                raise ApiFault(409, "would_empty_seed_set", f"{item_id} is the last seed; trend paused instead")
            self._record("seed_removed", {"trend_id": trend_id, "item_id": item_id, "reason": "manual"}, event_time)
            return self.trend_detail(trend_id)

    def pause_trend(self, trend_id: str, event_time: float = 0.0) -> dict:
        with self._write_lock:
            entry = self._require_trend(trend_id)
            if entry.trend.state == "active":
                self._record("trend_paused", {"trend_id": trend_id, "reason": "manual"}, event_time)
            return self.trend_detail(trend_id)

    def resume_trend(self, trend_id: str, event_time: float = 0.0) -> dict:
        with self._write_lock:
            entry = self._require_trend(trend_id)
            if not entry.trend.seed_ids:
                raise ApiFault(409, "would_empty_seed_set", "cannot resume a trend with no seeds")
            if entry.trend.state != "active":
                self._record("trend_resumed", {"trend_id": trend_id}, event_time)
            return self.trend_detail(trend_id)

    def set_tiers(self, trend_id: str, body: dict) -> dict:
        tiers_raw = body.get("tiers")
        if not isinstance(tiers_raw, list):
            raise ApiFault(422, "malformed_tiers", "tiers must be a list of {name, lower_bound}")
        try:
            validate_tiers([ActionTier(t["name"], float(t["lower_bound"])) for t in tiers_raw])
        except (TrendGuardError, KeyError, TypeError, ValueError) as exc:
            raise ApiFault(422, "malformed_tiers", str(exc)) from None
        with self._write_lock:
            self._require_trend(trend_id)
            self._record(
                "threshold_changed",
                {"trend_id": trend_id, "tiers": tiers_raw, "reason": "manual"},
                float(body.get("event_time", 0.0)),
            )
            return self.trend_detail(trend_id)

    def ingest_feedback(self, body: dict) -> dict:
        verdict = body.get("verdict")
        if verdict not in ("true_positive", "false_positive"):
            raise ApiFault(422, "bad_verdict", "verdict must be true_positive or false_positive")
        trend_id = body.get("trend_id", "")
        video_id = body.get("video_id", "")
        with self._write_lock:
            entry = self._require_trend(trend_id)
            decision = entry.book.decisions.get(video_id)
            if decision is None:
                raise ApiFault(404, "no_prior_decision", f"no decision for video {video_id} in trend {trend_id}")
            event_time = float(body.get("event_time", decision.decided_at))
            self._record(
                "label",
                {
                    "video_id": video_id,
                    "trend_id": trend_id,
                    "verdict": verdict,
                    "labeler": body.get("labeler", ""),
                    "prior_verdict": (entry.book.verdicts.get(video_id).verdict if video_id in entry.book.verdicts else None),
                },
                event_time,
            )
            stats = entry.book.seed_stats(event_time - self.config.window_seconds, event_time)
            seed_stats = stats.get(decision.best_seed_id)
            return {
                "video_id": video_id,
                "trend_id": trend_id,
                "seed_id": decision.best_seed_id,
                "n": seed_stats.n if seed_stats else 0,
                "r": seed_stats.r if seed_stats else 0,
                "precision": (seed_stats.r / seed_stats.n) if seed_stats and seed_stats.n else None,
            }

    def evaluate_trend(self, trend_id: str, body: dict) -> dict:
        """Backfill decisions for already-stored videos against one trend."""
        k = int(body.get("k", 200))
        with self._write_lock:
            entry = self._require_trend(trend_id)
            if entry.trend.state != "active":
                raise ApiFault(409, "trend_not_active", f"trend {trend_id} is {entry.trend.state}")
            if not entry.trend.seed_ids:
                return {"trend_id": trend_id, "decisions_created": 0}
            event_time = float(body.get("event_time", 0.0))
            store = self.stores[entry.trend.modality]
            created = 0
            for ts in retrieve_trend(entry.trend, store, k_per_seed=k, computed_at=event_time):
                if ts.video_id in entry.book.decisions:
                    continue
                decision = decide_action(ts, entry.tiers)
                if decision.tier is None:
                    continue
                self._record(
                    "decision",
                    {
                        "video_id": ts.video_id,
                        "trend_id": trend_id,
                        "score": ts.score,
                        "tier": decision.tier,
                        "best_seed_id": ts.best_seed_id,
                    },
                    event_time,
                )
                created += 1
            return {"trend_id": trend_id, "decisions_created": created}

    def run_cycle(self, trend_id: str, body: dict) -> dict:
        with self._write_lock:
            entry = self._require_trend(trend_id)
            window_end = float(body.get("window_end", 0.0))
            tiers = list(entry.tiers)
            report = run_feedback_cycle(
                entry.trend,
                tiers,
                entry.book,
                window_end=window_end,
                window_seconds=float(body.get("window_seconds", self.config.window_seconds)),
                prune_threshold=float(body.get("prune_threshold", self.config.prune_threshold)),
                min_n=int(body.get("min_n", self.config.min_n)),
                target_precision=float(body.get("target_precision", self.config.target_precision)),
                controller=entry.controller,
            )
            # the cycle mutated live objects; record the effects as events and
            # re-apply them onto the same state (idempotent mutations)
            for seed_id in report.removed_seeds:
                self.log.append(
                    "seed_removed",
                    {"trend_id": trend_id, "item_id": seed_id, "reason": "low_precision"},
                    window_end,
                    received_at=time.time(),
                )
            if report.paused:
                self.log.append(
                    "trend_paused", {"trend_id": trend_id, "reason": "all_seeds_low_precision"},
                    window_end, received_at=time.time(),
                )
            if report.threshold_changes:
                entry.tiers = tiers
                self.log.append(
                    "threshold_changed",
                    {
                        "trend_id": trend_id,
                        "tiers": [{"name": t.name, "lower_bound": t.lower_bound} for t in tiers],
                        "reason": "controller",
                    },
                    window_end,
                    received_at=time.time(),
                )
            return {
                "trend_id": trend_id,
                "window": list(report.window),
                "seed_precision": report.seed_precision,
                "removed_seeds": report.removed_seeds,
                "paused": report.paused,
                "threshold_changes": [
                    {"tier": name, "old": old, "new": new} for name, old, new in report.threshold_changes
                ],
                "warnings": report.warnings,
            }

    # -- reads ---------------------------------------------------------------

    def trend_summary(self, trend_id: str) -> dict:
        entry = self.trends[trend_id]
        return {
            "trend_id": trend_id,
            "name": entry.trend.name,
            "modality": entry.trend.modality,
            "state": entry.trend.state,
            "seed_count": len(entry.trend.seed_ids),
            "created_at": entry.trend.created_at,
        }

    def trend_detail(self, trend_id: str, *, window_end: float | None = None) -> dict:
        entry = self._require_trend(trend_id)
        if window_end is None:
            times = [d.decided_at for d in entry.book.decisions.values()]
            label_times = [l.labeled_at for l in entry.book.verdicts.values()]
            window_end = max(times + label_times, default=0.0)
        stats = entry.book.seed_stats(window_end - self.config.window_seconds, window_end)
        seeds = []
        for seed_id in entry.trend.seed_ids:
            s = stats.get(seed_id)
            seeds.append(
                {
                    "item_id": seed_id,
                    "provenance": entry.trend.seed_provenance[seed_id].provenance,
                    "n": s.n if s else 0,
                    "r": s.r if s else 0,
                    "precision": (s.r / s.n) if s and s.n else None,
                }
            )
        base = self.trend_summary(trend_id)
        base["seeds"] = seeds
        base["tiers"] = [{"name": t.name, "lower_bound": t.lower_bound} for t in entry.tiers]
        base["window_end"] = window_end
        return base

    def trend_list(self) -> list[dict]:
        return [self.trend_summary(tid) for tid in sorted(self.trends)]

    def candidates(self, trend_id: str, k: int = 200, offset: int = 0, limit: int = 200) -> dict:
        entry = self._require_trend(trend_id)
        if not entry.trend.seed_ids:
            return {"trend_id": trend_id, "k": k, "offset": offset, "candidates": []}
        store = self.stores[entry.trend.modality]
        ranked = retrieve_trend(entry.trend, store, k_per_seed=k)
        page = ranked[offset : offset + limit]
        out = []
        for ts in page:
            decision = entry.book.decisions.get(ts.video_id)
            label = entry.book.verdicts.get(ts.video_id)
            out.append(
                {
                    "video_id": ts.video_id,
                    "score": ts.score,
                    "best_seed_id": ts.best_seed_id,
                    "tier": decide_action(ts, entry.tiers).tier,
                    "decided_tier": decision.tier if decision else None,
                    "has_decision": decision is not None,
                    "label": label.verdict if label else None,
                }
            )
        return {"trend_id": trend_id, "k": k, "offset": offset, "candidates": out}

    def metrics(self) -> dict:
        per_trend = {}
        for trend_id in sorted(self.trends):
            entry = self.trends[trend_id]
            labeled = {vid: lab.verdict for vid, lab in entry.book.verdicts.items()}
            decisions = sorted(
                entry.book.decisions.values(), key=lambda d: (-d.score, d.video_id)
            )
            scores = [
                TrendScore(d.video_id, trend_id, d.score, d.best_seed_id, d.decided_at) for d in decisions
            ]
            try:
                p_at_k = trend_precision_at_k(scores, 200, labeled)
                effective_k = sum(1 for s in scores[:200] if s.video_id in labeled)
            except (NoLabeledCandidates, ValueError):
                p_at_k, effective_k = None, 0
            tier_counts = {"flag_review": 0, "restrict": 0, "escalate": 0}
            for d in entry.book.decisions.values():
                if d.tier:
                    tier_counts[d.tier] += 1
            per_trend[trend_id] = {
                "state": entry.trend.state,
                "seed_count": len(entry.trend.seed_ids),
                "decision_count": len(entry.book.decisions),
                "labeled_count": len(entry.book.verdicts),
                "precision_at_200": p_at_k,
                "effective_k": effective_k,
                "action_counts": tier_counts,
            }
        history = [
            {"seq": r.seq, "kind": r.kind, "event_time": r.event_time, "payload": r.payload}
            for r in self.log
            if r.kind in ("seed_removed", "threshold_changed", "trend_paused", "trend_resumed")
        ]
        lat = sorted(self.latencies_ms)
        latency = {
            "count": len(lat),
            "p50_ms": lat[len(lat) // 2] if lat else None,
            "p99_ms": lat[min(len(lat) - 1, int(len(lat) * 0.99))] if lat else None,
        }
        return {
            "trends": per_trend,
            "totals": {
                "videos": len(self.video_payload_hash),
                "events": len(self.log),
                "action_counts": dict(self.action_counts),
            },
            "feedback_history": history,
            "latency": latency,
            "state_hash": self.state_hash(),
        }

    def state_hash(self) -> str:
        """Deterministic digest of replayable state (latency excluded)."""
        trends_part = {}
        for trend_id in sorted(self.trends):
            entry = self.trends[trend_id]
            trends_part[trend_id] = {
                "name": entry.trend.name,
                "modality": entry.trend.modality,
                "state": entry.trend.state,
                "seeds": list(entry.trend.seed_ids),
                "tiers": [(t.name, t.lower_bound) for t in entry.tiers],
                "decisions": sorted(
                    (d.video_id, round(d.score, 12), d.tier or "", d.best_seed_id, d.decided_at)
                    for d in entry.book.decisions.values()
                ),
                "labels": sorted(
                    (l.video_id, l.verdict, l.labeler, l.labeled_at) for l in entry.book.verdicts.values()
                ),
            }
        hasher = hashlib.sha256(_canonical({"trends": trends_part, "actions": self.action_counts, "seq": len(self.log)}).encode())
        for modality in self.modalities:
            snap = self.stores[modality].snapshot()
            hasher.update(modality.encode())
            hasher.update(",".join(snap.ids).encode())
            hasher.update(snap.matrix.tobytes())
        return hasher.hexdigest()


def create_app(config: ServiceConfig) -> FastAPI:
    """FastAPI application bound to one ServiceState."""
    state = ServiceState(config)
    app = FastAPI(title="trendguard", version="0.1.0")
    app.state.service = state

    def fault(exc: ApiFault) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status,
            content={"http_status": exc.status, "code": exc.code, "message": exc.message},
        )

    @app.exception_handler(ApiFault)
    async def handle_fault(request: Request, exc: ApiFault):
        return fault(exc)

    @app.exception_handler(TrendGuardError)
    async def handle_domain_error(request: Request, exc: TrendGuardError):
        mapping = {UnknownTrend: (404, "unknown_trend"), UnknownItem: (404, "unknown_item")}
        status, code = mapping.get(type(exc), (500, "internal"))
        return fault(ApiFault(status, code, str(exc)))

    @app.middleware("http")
    async def observe(request: Request, call_next):
        if config.api_token and request.url.path.startswith(("/videos", "/trends", "/feedback", "/metrics")):
            if request.headers.get("authorization") != f"Bearer {config.api_token}":
                return fault(ApiFault(401, "unauthorized", "missing or invalid API token"))
        start = time.perf_counter()
        response = await call_next(request)
        elapsed = (time.perf_counter() - start) * 1000.0
        state.latencies_ms.append(elapsed)
        if len(state.latencies_ms) > 10_000:
            del state.latencies_ms[: len(state.latencies_ms) - 10_000]
        return response

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "events": len(state.log)}

    @app.post("/videos")
    async def post_video(request: Request):
        return state.ingest_video(await request.json())

    @app.post("/trends", status_code=201)
    async def post_trend(request: Request):
        return state.create_trend(await request.json())

    @app.get("/trends")
    def get_trends():
        return state.trend_list()

    @app.get("/trends/{trend_id}")
    def get_trend(trend_id: str):
        return state.trend_detail(trend_id)

    @app.post("/trends/{trend_id}/seeds")
    async def post_seed(trend_id: str, request: Request):
        return state.add_seed(trend_id, await request.json())

    @app.delete("/trends/{trend_id}/seeds/{seed_id}")
    def delete_seed(trend_id: str, seed_id: str, event_time: float = 0.0):
        return state.remove_seed(trend_id, seed_id, event_time)

    @app.post("/trends/{trend_id}/pause")
    async def post_pause(trend_id: str, request: Request):
        body = await request.json() if await request.body() else {}
        return state.pause_trend(trend_id, float(body.get("event_time", 0.0)))

    @app.post("/trends/{trend_id}/resume")
    async def post_resume(trend_id: str, request: Request):
        body = await request.json() if await request.body() else {}
        return state.resume_trend(trend_id, float(body.get("event_time", 0.0)))

    @app.post("/trends/{trend_id}/tiers")
    async def post_tiers(trend_id: str, request: Request):
        return state.set_tiers(trend_id, await request.json())

    @app.get("/trends/{trend_id}/candidates")
    def get_candidates(trend_id: str, k: int = 200, offset: int = 0, limit: int = 200):
        return state.candidates(trend_id, k=k, offset=offset, limit=limit)

    @app.post("/trends/{trend_id}/evaluate")
    async def post_evaluate(trend_id: str, request: Request):
        body = await request.json() if await request.body() else {}
        return state.evaluate_trend(trend_id, body)

    @app.post("/trends/{trend_id}/feedback-cycle")
    async def post_cycle(trend_id: str, request: Request):
        body = await request.json() if await request.body() else {}
        return state.run_cycle(trend_id, body)

    @app.get("/trends/{trend_id}/seed-suggestions")
    def get_suggestions(trend_id: str, strategy: str = "cluster", eps: float = 0.3, min_pts: int = 3,
                        per_cluster: int = 3, threshold: float = 0.8, min_n: int = 20):
        return suggest_seeds(state, trend_id, strategy, eps, min_pts, per_cluster, threshold, min_n)

    @app.post("/feedback")
    async def post_feedback(request: Request):
        return state.ingest_feedback(await request.json())

    @app.get("/metrics")
    def get_metrics():
        return state.metrics()

    @app.post("/admin/flush-vectors")
    def post_flush():
        state.flush_vectors()
        return {"flushed": list(state.modalities)}

    static_dir = config.static_dir
    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app


def suggest_seeds(state: ServiceState, trend_id: str, strategy: str, eps: float, min_pts: int,
                  per_cluster: int, threshold: float, min_n: int) -> dict:
    from .seeds import centroid_proximity_seeds, dbscan, select_historical_seeds

    entry = state.trends.get(trend_id)
    if entry is None:
        raise ApiFault(404, "unknown_trend", f"trend {trend_id} does not exist")
    if strategy == "cluster":
        store = state.stores[entry.trend.modality]
        if len(store) == 0:
            return {"trend_id": trend_id, "strategy": strategy, "suggestions": []}
        assignment = dbscan(store, eps, min_pts)
        suggestions = []
        sizes = [(len(members), cid) for cid, members in enumerate(assignment.clusters())]
        for size, cid in sorted(sizes, reverse=True)[:5]:
            for item in centroid_proximity_seeds(store, assignment, cid, per_cluster):
                if item not in entry.trend.seed_provenance:
                    suggestions.append({"item_id": item, "provenance": f"cluster-{cid}", "cluster_size": size})
        return {"trend_id": trend_id, "strategy": strategy, "suggestions": suggestions}
    if strategy == "historical":
        times = [d.decided_at for d in entry.book.decisions.values()]
        window_end = max(times, default=0.0)
        stats = entry.book.seed_stats(window_end - state.config.window_seconds, window_end)
        accepted = select_historical_seeds(list(stats.values()), threshold, min_n)
        suggestions = [
            {
                "item_id": seed_id,
                "provenance": f"historical p={stats[seed_id].r}/{stats[seed_id].n}",
                "precision": stats[seed_id].r / stats[seed_id].n,
            }
            for seed_id in accepted
        ]
        return {"trend_id": trend_id, "strategy": strategy, "suggestions": suggestions}
    raise ApiFault(422, "bad_request", f"unknown strategy {strategy!r}")
