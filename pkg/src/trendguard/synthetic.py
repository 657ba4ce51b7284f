"""Synthetic corpus generator for retrieval experiments.

Each trend is a pair of latent unit directions (one per modality). A
member's tokens are the trend latent plus Gaussian spread sigma_c,
re-normalized to the unit sphere; negatives are isotropic unit tokens, so
vector magnitude carries no class signal. Latents drift over event time by
rotating inside a fixed per-trend plane, which spreads a trend across its
timeline and makes seed coverage matter.

Intra-trend token cosine stays above the trend-to-negative level roughly
while sigma_c^2 * dim < 1 (members concentrate around the latent); the
generator defaults keep well inside that bound.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .training import Record
from .version import __version__


@dataclass(frozen=True)
class SynthConfig:
    n_trends: int = 25
    size_range: tuple[int, int] = (200, 2000)
    neg_per_pos: float = 10.0  # 1:10 positive-to-negative
    dim: int = 8  # token feature dimension (both modalities)
    sigma_c: float = 0.25
    drift_rate: float = 0.02  # radians of latent rotation per time step
    seed: int = 0
    t_v: int = 4
    t_t: int = 4
    n_steps: int = 12
    step_seconds: float = 3600.0

    def validate(self) -> None:
        if self.n_trends < 0:
            raise ConfigError("n_trends must be >= 0")
        if self.size_range[0] < 1 or self.size_range[1] < self.size_range[0]:
            raise ConfigError("size range must satisfy 1 <= min <= max")
        if self.neg_per_pos < 0:
            raise ConfigError("negative ratio must be >= 0")
        if self.dim < 2:
            raise ConfigError("token dimension must be >= 2")
        if self.sigma_c < 0:
            raise ConfigError("cluster spread must be >= 0")
        if self.t_v < 1 or self.t_t < 1:
            raise ConfigError("token counts must be >= 1")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")

    def fingerprint(self) -> str:
        """Hash of the config plus the code version."""
        blob = json.dumps({"config": asdict(self), "version": __version__}, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class TrendTruth:
    """Ground truth for one generated trend."""

    label: int
    size: int
    visual_latent: np.ndarray
    text_latent: np.ndarray


@dataclass
class SynthDataset:
    records: list[Record]
    trends: list[TrendTruth]
    config: SynthConfig

    @property
    def positives(self) -> list[Record]:
        return [r for r in self.records if r.label >= 0]

    @property
    def negatives(self) -> list[Record]:
        return [r for r in self.records if r.label < 0]


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _drift_plane(rng: np.random.Generator, latent: np.ndarray) -> np.ndarray:
    """A unit vector orthogonal to the latent, spanning its drift plane."""
    raw = rng.normal(size=latent.shape[0])
    raw -= raw.dot(latent) * latent
    norm = np.linalg.norm(raw)
    if norm < 1e-9:  # essentially impossible for dim >= 2; retry deterministic
        raw = np.roll(latent, 1)
        raw -= raw.dot(latent) * latent
        norm = np.linalg.norm(raw)
    return raw / norm


def _member_tokens(
    rng: np.random.Generator, latent: np.ndarray, partner: np.ndarray, angle: float, count: int, sigma: float
) -> np.ndarray:
    drifted = np.cos(angle) * latent + np.sin(angle) * partner
    tokens = drifted[None, :] + rng.normal(0.0, sigma, size=(count, latent.shape[0]))
    return tokens / np.linalg.norm(tokens, axis=1, keepdims=True)


def gen_synthetic(config: SynthConfig) -> SynthDataset:
    """Generate a labeled corpus of trend members and isotropic negatives.

    Fully deterministic per config seed. Labels are the trend index, or -1
    for negatives; timestamps are event-time seconds on a step grid. With
    n_trends = 0 there is no positive base for the ratio, so neg_per_pos is
    read as an absolute negative count.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    records: list[Record] = []
    truths: list[TrendTruth] = []

    for t in range(config.n_trends):
        size = int(rng.integers(config.size_range[0], config.size_range[1] + 1))
        latent_v = _unit(rng, config.dim)
        latent_t = _unit(rng, config.dim)
        plane_v = _drift_plane(rng, latent_v)
        plane_t = _drift_plane(rng, latent_t)
        truths.append(TrendTruth(label=t, size=size, visual_latent=latent_v, text_latent=latent_t))
        steps = rng.integers(0, config.n_steps, size=size)
        for j in range(size):
            angle = config.drift_rate * float(steps[j])
            records.append(
                Record(
                    item_id=f"t{t:03d}-m{j:05d}",
                    label=t,
                    visual=_member_tokens(rng, latent_v, plane_v, angle, config.t_v, config.sigma_c),
                    text=_member_tokens(rng, latent_t, plane_t, angle, config.t_t, config.sigma_c),
                    timestamp=float(steps[j]) * config.step_seconds,
                )
            )

    n_pos = len(records)
    n_neg = int(round(n_pos * config.neg_per_pos)) if config.n_trends > 0 else int(config.neg_per_pos)
    neg_steps = rng.integers(0, config.n_steps, size=n_neg)
    for j in range(n_neg):
        visual = rng.normal(size=(config.t_v, config.dim))
        text = rng.normal(size=(config.t_t, config.dim))
        records.append(
            Record(
                item_id=f"neg-{j:06d}",
                label=-1,
                visual=visual / np.linalg.norm(visual, axis=1, keepdims=True),
                text=text / np.linalg.norm(text, axis=1, keepdims=True),
                timestamp=float(neg_steps[j]) * config.step_seconds,
            )
        )
    return SynthDataset(records=records, trends=truths, config=config)
