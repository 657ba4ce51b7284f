import numpy as np
import pytest

from trendguard.errors import ConfigError
from trendguard.synthetic import SynthConfig, gen_synthetic


def small_config(**overrides):
    base = dict(n_trends=5, size_range=(20, 40), neg_per_pos=2.0, dim=8, seed=7)
    base.update(overrides)
    return SynthConfig(**base)


class TestGenSynthetic:
    def test_counts_match_config(self):
        ds = gen_synthetic(small_config())
        assert len(ds.trends) == 5
        for truth in ds.trends:
            members = [r for r in ds.records if r.label == truth.label]
            assert len(members) == truth.size
            assert 20 <= truth.size <= 40
        n_pos = sum(t.size for t in ds.trends)
        assert len(ds.negatives) == round(2.0 * n_pos)

    def test_no_trends_means_only_negatives(self):
        ds = gen_synthetic(small_config(n_trends=0, neg_per_pos=30))
        assert ds.positives == []
        assert len(ds.negatives) == 30
        assert all(r.label == -1 for r in ds.records)

    def test_deterministic(self):
        a = gen_synthetic(small_config())
        b = gen_synthetic(small_config())
        assert [r.item_id for r in a.records] == [r.item_id for r in b.records]
        for ra, rb in zip(a.records, b.records):
            np.testing.assert_array_equal(ra.visual, rb.visual)
            np.testing.assert_array_equal(ra.text, rb.text)
            assert ra.timestamp == rb.timestamp

    def test_tokens_unit_norm_and_shaped(self):
        ds = gen_synthetic(small_config(t_v=3, t_t=5))
        r = ds.records[0]
        assert r.visual.shape == (3, 8)
        assert r.text.shape == (5, 8)
        np.testing.assert_allclose(np.linalg.norm(r.visual, axis=1), 1.0, atol=1e-9)

    def test_intra_trend_cosine_exceeds_negative_cosine(self):
        # documented bound: members concentrate while sigma_c^2 * dim < 1
        ds = gen_synthetic(small_config(sigma_c=0.25, n_trends=4, size_range=(30, 30)))
        for truth in ds.trends:
            members = np.stack([r.visual.mean(axis=0) for r in ds.records if r.label == truth.label])
            members /= np.linalg.norm(members, axis=1, keepdims=True)
            gram = members @ members.T
            intra = gram[~np.eye(len(members), dtype=bool)].mean()
            negs = np.stack([r.visual.mean(axis=0) for r in ds.negatives[:200]])
            negs /= np.linalg.norm(negs, axis=1, keepdims=True)
            cross = (members @ negs.T).mean()
            assert intra > cross + 0.2

    def test_drift_spreads_over_time(self):
        still = gen_synthetic(small_config(drift_rate=0.0, n_trends=1, size_range=(200, 200), n_steps=10))
        drifted = gen_synthetic(small_config(drift_rate=0.15, n_trends=1, size_range=(200, 200), n_steps=10))

        def mean_extreme_step_cosine(ds):
            early = [r for r in ds.positives if r.timestamp == 0.0]
            late = [r for r in ds.positives if r.timestamp == max(p.timestamp for p in ds.positives)]
            a = np.stack([r.visual.mean(axis=0) for r in early])
            b = np.stack([r.visual.mean(axis=0) for r in late])
            a /= np.linalg.norm(a, axis=1, keepdims=True)
            b /= np.linalg.norm(b, axis=1, keepdims=True)
            return (a @ b.T).mean()

        assert mean_extreme_step_cosine(drifted) < mean_extreme_step_cosine(still) - 0.05

    def test_timestamps_on_step_grid(self):
        ds = gen_synthetic(small_config(n_steps=6, step_seconds=100.0))
        steps = {r.timestamp for r in ds.records}
        assert steps <= {100.0 * s for s in range(6)}

    def test_default_shape_counts_exact(self):
        # default evaluation shape: 25 trends with sizes drawn from the
        # full 200..20000 range; every sampled size is honored exactly
        config = SynthConfig(n_trends=25, size_range=(200, 20000), neg_per_pos=0.0, seed=13)
        ds = gen_synthetic(config)
        assert len(ds.trends) == 25
        by_label = {}
        for r in ds.positives:
            by_label[r.label] = by_label.get(r.label, 0) + 1
        for truth in ds.trends:
            assert by_label[truth.label] == truth.size
            assert 200 <= truth.size <= 20000
        assert ds.negatives == []

    def test_validation(self):
        with pytest.raises(ConfigError):
            SynthConfig(n_trends=-1).validate()
        with pytest.raises(ConfigError):
            SynthConfig(size_range=(10, 5)).validate()
        with pytest.raises(ConfigError):
            SynthConfig(sigma_c=-0.1).validate()

    def test_fingerprint_stable_and_sensitive(self):
        assert small_config().fingerprint() == small_config().fingerprint()
        assert small_config().fingerprint() != small_config(seed=8).fingerprint()
