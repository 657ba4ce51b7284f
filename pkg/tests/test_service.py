import json
import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from trendguard.errors import ConfigError
from trendguard.service import ServiceConfig, create_app, load_service_config
from trendguard.synthetic import SynthConfig, gen_synthetic
from trendguard.training import TrainConfig, save_manifest, train


@pytest.fixture(scope="module")
def trained_manifest(tmp_path_factory):
    """Small trained single+multimodal manifest shared by service tests."""
    root = tmp_path_factory.mktemp("models")
    ds = gen_synthetic(SynthConfig(n_trends=4, size_range=(30, 50), neg_per_pos=1.0, dim=6, seed=42))
    config = TrainConfig(epochs=3, batch_n=16, out_dim=16, hidden=12, d_model=8, learning_rate=3e-3, seed=0)
    single, _ = train(ds.positives, config, "single")
    multi, _ = train(ds.positives, config, "multimodal")
    path = root / "models.json"
    save_manifest({"single": single, "multimodal": multi}, path)
    return str(path), ds


def make_client(tmp_path, trained_manifest, subdir="svc"):
    manifest, ds = trained_manifest
    data_dir = tmp_path / subdir
    config = ServiceConfig(data_dir=str(data_dir), model_manifest=manifest)
    app = create_app(config)
    return TestClient(app), ds, config


def video_body(record, event_time=None):
    return {
        "id": record.item_id,
        "visual": np.asarray(record.visual).tolist(),
        "text": np.asarray(record.text).tolist(),
        "event_time": record.timestamp if event_time is None else event_time,
    }


def ingest_corpus(client, records, event_time=None):
    for r in records:
        response = client.post("/videos", json=video_body(r, event_time))
        assert response.status_code == 200, response.text


class TestConfig:
    def test_missing_manifest_is_config_error(self):
        with pytest.raises(ConfigError):
            load_service_config(None, env={})

    def test_env_overrides(self, trained_manifest, tmp_path):
        manifest, _ = trained_manifest
        cfg_file = tmp_path / "svc.json"
        cfg_file.write_text(json.dumps({"data_dir": "/tmp/x", "model_manifest": manifest}))
        config = load_service_config(str(cfg_file), env={"DATA_DIR": str(tmp_path / "y"), "LISTEN_ADDR": "0.0.0.0:1"})
        assert config.data_dir == str(tmp_path / "y")
        assert config.listen_addr == "0.0.0.0:1"
        assert config.model_manifest == manifest

    def test_unknown_keys_rejected(self, tmp_path):
        cfg_file = tmp_path / "svc.json"
        cfg_file.write_text(json.dumps({"nope": 1}))
        with pytest.raises(ConfigError):
            load_service_config(str(cfg_file), env={})


class TestVideoIngestion:
    def test_ingest_and_idempotent_replay(self, tmp_path, trained_manifest):
        client, ds, _ = make_client(tmp_path, trained_manifest)
        body = video_body(ds.records[0])
        first = client.post("/videos", json=body)
        assert first.status_code == 200
        assert first.json()["embeddings_computed"] == ["single", "multimodal"]
        events_before = client.get("/metrics").json()["totals"]["events"]
        again = client.post("/videos", json=body)
        assert again.status_code == 200
        assert again.json()["replay"] is True
        assert client.get("/metrics").json()["totals"]["events"] == events_before

    def test_conflicting_body_409(self, tmp_path, trained_manifest):
        client, ds, _ = make_client(tmp_path, trained_manifest)
        body = video_body(ds.records[0])
        assert client.post("/videos", json=body).status_code == 200
        altered = dict(body, event_time=body["event_time"] + 1)
        response = client.post("/videos", json=altered)
        assert response.status_code == 409
        assert response.json()["code"] == "duplicate_id"

    def test_malformed_tokens_422(self, tmp_path, trained_manifest):
        client, _, _ = make_client(tmp_path, trained_manifest)
        bad = {"id": "x", "visual": [["a", "b"]], "text": [[0.1]], "event_time": 0}
        response = client.post("/videos", json=bad)
        assert response.status_code == 422
        assert response.json()["code"] == "malformed_tokens"

    def test_seed_duplicate_scores_highest_tier(self, tmp_path, trained_manifest):
        client, ds, _ = make_client(tmp_path, trained_manifest)
        members = [r for r in ds.records if r.label == 0][:5]
        ingest_corpus(client, members)
        trend = client.post("/trends", json={"name": "trend-0", "modality": "single"}).json()
        client.post(f"/trends/{trend['trend_id']}/seeds", json={"item_id": members[0].item_id})
        twin = video_body(members[0])
        twin["id"] = "twin-of-seed"
        response = client.post("/videos", json=twin).json()
        assert len(response["decisions"]) == 1
        decision = response["decisions"][0]
        assert decision["tier"] == "escalate"
        assert decision["score"] == pytest.approx(1.0, abs=1e-6)


class TestTrendLifecycle:
    def test_create_add_seed_get(self, tmp_path, trained_manifest):
        client, ds, _ = make_client(tmp_path, trained_manifest)
        members = [r for r in ds.records if r.label == 1][:3]
        ingest_corpus(client, members)
        created = client.post("/trends", json={"name": "demo", "modality": "single"})
        assert created.status_code == 201
        tid = created.json()["trend_id"]
        added = client.post(f"/trends/{tid}/seeds", json={"item_id": members[0].item_id})
        assert added.status_code == 200
        detail = client.get(f"/trends/{tid}").json()
        assert [s["item_id"] for s in detail["seeds"]] == [members[0].item_id]
        assert detail["state"] == "active"

    def test_unknown_item_404(self, tmp_path, trained_manifest):
        client, _, _ = make_client(tmp_path, trained_manifest)
        tid = client.post("/trends", json={"name": "x"}).json()["trend_id"]
        response = client.post(f"/trends/{tid}/seeds", json={"item_id": "ghost"})
        assert response.status_code == 404
        assert response.json()["code"] == "unknown_item"

    def test_delete_last_seed_pauses(self, tmp_path, trained_manifest):
        client, ds, _ = make_client(tmp_path, trained_manifest)
        members = [r for r in ds.records if r.label == 0][:2]
        ingest_corpus(client, members)
        tid = client.post("/trends", json={"name": "guard"}).json()["trend_id"]
        client.post(f"/trends/{tid}/seeds", json={"item_id": members[0].item_id})
        response = client.delete(f"/trends/{tid}/seeds/{members[0].item_id}")
        assert response.status_code == 409
        assert response.json()["code"] == "would_empty_seed_set"
        assert client.get(f"/trends/{tid}").json()["state"] == "paused"
        # seed retained
        assert client.get(f"/trends/{tid}").json()["seeds"][0]["item_id"] == members[0].item_id

    def test_tier_update_logged(self, tmp_path, trained_manifest):
        client, _, _ = make_client(tmp_path, trained_manifest)
        tid = client.post("/trends", json={"name": "tiers"}).json()["trend_id"]
        new_tiers = [
            {"name": "flag_review", "lower_bound": 0.6},
            {"name": "restrict", "lower_bound": 0.75},
            {"name": "escalate", "lower_bound": 0.92},
        ]
        response = client.post(f"/trends/{tid}/tiers", json={"tiers": new_tiers})
        assert response.status_code == 200
        history = client.get("/metrics").json()["feedback_history"]
        assert any(h["kind"] == "threshold_changed" for h in history)

    def test_bad_tier_ordering_422(self, tmp_path, trained_manifest):
        client, _, _ = make_client(tmp_path, trained_manifest)
        tid = client.post("/trends", json={"name": "bad"}).json()["trend_id"]
        bad = [{"name": "flag_review", "lower_bound": 0.9}, {"name": "restrict", "lower_bound": 0.6}]
        response = client.post(f"/trends/{tid}/tiers", json={"tiers": bad})
        assert response.status_code == 422

    def test_concurrent_seed_adds_both_present(self, tmp_path, trained_manifest):
        client, ds, _ = make_client(tmp_path, trained_manifest)
        members = [r for r in ds.records if r.label == 2][:8]
        ingest_corpus(client, members)
        tid = client.post("/trends", json={"name": "concurrent"}).json()["trend_id"]
        outcomes = []

        def add(item_id):
            outcomes.append(client.post(f"/trends/{tid}/seeds", json={"item_id": item_id}).status_code)

        threads = [threading.Thread(target=add, args=(m.item_id,)) for m in members]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert all(code == 200 for code in outcomes)
        detail = client.get(f"/trends/{tid}").json()
        assert sorted(s["item_id"] for s in detail["seeds"]) == sorted(m.item_id for m in members)


class TestCandidatesAndFeedback:
    def build_reviewable(self, tmp_path, trained_manifest, n_members=20):
        client, ds, config = make_client(tmp_path, trained_manifest)
        members = [r for r in ds.records if r.label == 0][:n_members]
        negatives = ds.negatives[:10]
        ingest_corpus(client, members + negatives, event_time=3600.0)
        tid = client.post("/trends", json={"name": "review", "modality": "single"}).json()["trend_id"]
        client.post(f"/trends/{tid}/seeds", json={"item_id": members[0].item_id})
        backfill = client.post(f"/trends/{tid}/evaluate", json={"event_time": 3600.0})
        assert backfill.status_code == 200
        return client, tid, members

    def test_candidates_ranked_and_annotated(self, tmp_path, trained_manifest):
        client, tid, members = self.build_reviewable(tmp_path, trained_manifest)
        out = client.get(f"/trends/{tid}/candidates", params={"k": 50}).json()
        scores = [c["score"] for c in out["candidates"]]
        assert scores == sorted(scores, reverse=True)
        assert all("tier" in c and "label" in c for c in out["candidates"])
        seed_ids = {members[0].item_id}
        assert not (seed_ids & {c["video_id"] for c in out["candidates"]})

    def test_feedback_updates_seed_stats(self, tmp_path, trained_manifest):
        client, tid, members = self.build_reviewable(tmp_path, trained_manifest)
        candidates = client.get(f"/trends/{tid}/candidates").json()["candidates"]
        actionable = [c for c in candidates if c["has_decision"]]
        assert actionable
        target = actionable[0]
        response = client.post(
            "/feedback",
            json={"video_id": target["video_id"], "trend_id": tid, "verdict": "true_positive", "labeler": "mod"},
        )
        assert response.status_code == 200
        body = response.json()
        assert body["n"] == 1 and body["r"] == 1 and body["precision"] == 1.0

    def test_label_without_decision_404(self, tmp_path, trained_manifest):
        client, tid, _ = self.build_reviewable(tmp_path, trained_manifest)
        response = client.post(
            "/feedback", json={"video_id": "ghost", "trend_id": tid, "verdict": "true_positive", "labeler": "m"}
        )
        assert response.status_code == 404
        assert response.json()["code"] == "no_prior_decision"

    def test_bad_verdict_422(self, tmp_path, trained_manifest):
        client, tid, _ = self.build_reviewable(tmp_path, trained_manifest)
        response = client.post("/feedback", json={"video_id": "v", "trend_id": tid, "verdict": "meh"})
        assert response.status_code == 422

    def test_seed_stats_equal_log_fold(self, tmp_path, trained_manifest, rng):
        client, tid, members = self.build_reviewable(tmp_path, trained_manifest)
        candidates = [c for c in client.get(f"/trends/{tid}/candidates").json()["candidates"] if c["has_decision"]]
        want_tp = 0
        for c in candidates:
            verdict = "true_positive" if rng.random() < 0.6 else "false_positive"
            want_tp += verdict == "true_positive"
            client.post("/feedback", json={"video_id": c["video_id"], "trend_id": tid, "verdict": verdict, "labeler": "m"})
        detail = client.get(f"/trends/{tid}").json()
        stats = detail["seeds"][0]
        assert stats["n"] == len(candidates)
        assert stats["r"] == want_tp


class TestMetricsAndReplay:
    def test_fresh_service_zeroes(self, tmp_path, trained_manifest):
        client, _, _ = make_client(tmp_path, trained_manifest)
        metrics = client.get("/metrics").json()
        assert metrics["totals"] == {"videos": 0, "events": 0, "action_counts": {"flag_review": 0, "restrict": 0, "escalate": 0}}
        assert metrics["trends"] == {}

    def test_action_counters_monotone(self, tmp_path, trained_manifest):
        client, ds, _ = make_client(tmp_path, trained_manifest)
        members = [r for r in ds.records if r.label == 0][:10]
        ingest_corpus(client, members[:5])
        tid = client.post("/trends", json={"name": "mono", "modality": "single"}).json()["trend_id"]
        client.post(f"/trends/{tid}/seeds", json={"item_id": members[0].item_id})
        last = -1
        for r in members[5:]:
            client.post("/videos", json=video_body(r))
            counts = client.get("/metrics").json()["totals"]["action_counts"]
            total = sum(counts.values())
            assert total >= last
            last = total

    def test_crash_replay_reconstructs_state(self, tmp_path, trained_manifest, rng):
        manifest, ds = trained_manifest
        data_dir = tmp_path / "replay"
        config = ServiceConfig(data_dir=str(data_dir), model_manifest=manifest)
        app = create_app(config)
        client = TestClient(app)
        members = [r for r in ds.records if r.label == 3][:12]
        ingest_corpus(client, members, event_time=7200.0)
        tid = client.post("/trends", json={"name": "crashy", "modality": "multimodal"}).json()["trend_id"]
        client.post(f"/trends/{tid}/seeds", json={"item_id": members[0].item_id})
        client.post(f"/trends/{tid}/seeds", json={"item_id": members[1].item_id})
        client.post(f"/trends/{tid}/evaluate", json={"event_time": 7200.0})
        candidates = [c for c in client.get(f"/trends/{tid}/candidates").json()["candidates"] if c["has_decision"]]
        for c in candidates[:6]:
            verdict = "true_positive" if rng.random() < 0.5 else "false_positive"
            client.post("/feedback", json={"video_id": c["video_id"], "trend_id": tid, "verdict": verdict, "labeler": "m"})
        client.post(f"/trends/{tid}/feedback-cycle", json={"window_end": 7200.0, "min_n": 3})
        before_metrics = client.get("/metrics").json()
        before_trends = client.get("/trends").json()
        before_detail = client.get(f"/trends/{tid}").json()
        # no flush, no clean shutdown: a second app folds the log from disk
        app2 = create_app(config)
        client2 = TestClient(app2)
        after_metrics = client2.get("/metrics").json()
        assert after_metrics["state_hash"] == before_metrics["state_hash"]
        before_metrics.pop("latency"), after_metrics.pop("latency")
        assert after_metrics == before_metrics
        assert client2.get("/trends").json() == before_trends
        assert client2.get(f"/trends/{tid}").json() == before_detail

    def test_vector_file_cache_matches_recompute(self, tmp_path, trained_manifest):
        manifest, ds = trained_manifest
        data_dir = tmp_path / "cache"
        config = ServiceConfig(data_dir=str(data_dir), model_manifest=manifest)
        client = TestClient(create_app(config))
        ingest_corpus(client, ds.records[:8])
        hash_before = client.get("/metrics").json()["state_hash"]
        assert client.post("/admin/flush-vectors").status_code == 200
        client2 = TestClient(create_app(config))
        assert client2.get("/metrics").json()["state_hash"] == hash_before
