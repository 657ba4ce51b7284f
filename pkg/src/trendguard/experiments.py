"""Offline experiment runners: method comparison, seed sweep, loss ablation.

Protocols, at desk scale:

  method comparison  train encoders and a softmax classifier on one corpus
                     (its trends plus a background class), then evaluate on
                     a second corpus whose trends neither model ever saw.
                     EBR scores each eval item by max cosine to the seeds
                     sampled per eval trend; the classifier scores by
                     1 - P(background). Seed items are excluded from every
                     metric input so EBR gets no free positives, and the
                     classifier reports no P@K (it has no per-trend ranking).

  seed sweep         one trained encoder, seed fractions swept with nested
                     sampling (each fraction's seeds are a prefix of the
                     next), candidate pool held fixed across fractions.

  loss ablation      identical budgets and seeds for the contrastive,
                     twin-only contrastive, and classifier-embedding modes;
                     retrieval precision measured per trend on a held-out
                     split of the same corpus.

All runs are deterministic per seed and emit CSV plus a JSON summary
carrying a config fingerprint.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .metrics import best_f1, precision_at_k, pr_auc, roc_auc
from .synthetic import SynthConfig, SynthDataset, gen_synthetic
from .version import __version__
from .training import (
    Record,
    TrainConfig,
    classifier_scores,
    train,
    _encode_batch,
)

DEFAULT_FRACTIONS = (0.01, 0.02, 0.05, 0.10, 0.15, 0.20)


@dataclass(frozen=True)
class ExperimentConfig:
    eval_synth: SynthConfig = field(
        default_factory=lambda: SynthConfig(n_trends=25, size_range=(200, 2000), neg_per_pos=10.0, seed=1)
    )
    train_synth: SynthConfig = field(
        default_factory=lambda: SynthConfig(n_trends=10, size_range=(80, 160), neg_per_pos=1.0, seed=2)
    )
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=10, batch_n=32, learning_rate=3e-3))
    seed_fraction: float = 0.05
    k_per_trend: int = 200
    seed: int = 0

    def fingerprint(self) -> str:
        blob = json.dumps({"config": asdict(self), "version": __version__}, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def embed_matrix(records: Sequence[Record], params, mode: str, *, chunk: int = 8192) -> np.ndarray:
    """Float32 embedding rows for records, in order."""
    parts = [
        _encode_batch(records[start : start + chunk], params, mode)
        for start in range(0, len(records), chunk)
    ]
    return np.vstack(parts)


def max_sim_scores(matrix: np.ndarray, seeds: np.ndarray, *, chunk: int = 8192) -> np.ndarray:
    """Per-row max cosine against the seed rows, float64 accumulation."""
    seeds64 = np.asarray(seeds, dtype=np.float64).T
    out = np.empty(matrix.shape[0])
    for start in range(0, matrix.shape[0], chunk):
        sims = matrix[start : start + chunk].astype(np.float64) @ seeds64
        out[start : start + chunk] = sims.max(axis=1)
    np.clip(out, -1.0, 1.0, out=out)
    return out


def sample_seed_indices(
    dataset: SynthDataset, fraction: float, rng: np.random.Generator
) -> dict[int, np.ndarray]:
    """Per-trend member indices chosen as seeds: max(1, round(frac * size))."""
    by_trend: dict[int, list[int]] = {}
    for i, r in enumerate(dataset.records):
        if r.label >= 0:
            by_trend.setdefault(r.label, []).append(i)
    out: dict[int, np.ndarray] = {}
    for label, indices in sorted(by_trend.items()):
        count = max(1, int(round(fraction * len(indices))))
        out[label] = rng.choice(np.asarray(indices), size=min(count, len(indices)), replace=False)
    return out


@dataclass
class MethodMetrics:
    method: str
    p_at_k: float | None
    pr_auc: float
    roc_auc: float
    f1: float
    f1_threshold: float


@dataclass
class Table1Result:
    rows: list[MethodMetrics]
    seed_fraction: float
    n_eval: int
    fingerprint: str

    def by_method(self) -> dict[str, MethodMetrics]:
        return {r.method: r for r in self.rows}


def _binary_metrics(method: str, scores: np.ndarray, relevant: np.ndarray, p_at_k: float | None) -> MethodMetrics:
    pairs = list(zip(scores.tolist(), relevant.tolist()))
    f1, threshold = best_f1(pairs)
    return MethodMetrics(
        method=method,
        p_at_k=p_at_k,
        pr_auc=pr_auc(pairs),
        roc_auc=roc_auc(pairs),
        f1=f1,
        f1_threshold=threshold,
    )


def _macro_p_at_k(
    matrix: np.ndarray,
    dataset: SynthDataset,
    seed_indices: dict[int, np.ndarray],
    k: int,
) -> float:
    """P@k per trend (own seeds excluded from candidates), macro-averaged."""
    labels = np.asarray([r.label for r in dataset.records])
    values = []
    for trend_label, seed_idx in sorted(seed_indices.items()):
        seeds = matrix[seed_idx]
        mask = np.ones(len(labels), dtype=bool)
        mask[seed_idx] = False
        scores = max_sim_scores(matrix[mask], seeds)
        relevant = labels[mask] == trend_label
        values.append(precision_at_k(list(zip(scores.tolist(), relevant.tolist())), k))
    return float(np.mean(values))


def run_table1_experiment(
    eval_dataset: SynthDataset,
    models: dict[str, object],
    seed_fraction: float = 0.05,
    *,
    k_per_trend: int = 200,
    background_label: int = -1,
    sampling_seed: int = 0,
    fingerprint: str = "",
) -> Table1Result:
    """Score one unseen-trend corpus with trained models and compare methods.

    `models` maps mode name to trained params and must contain "single",
    "multimodal", and "classifier". The classifier's background class is
    the one trained for `background_label`.
    """
    rng = np.random.default_rng(sampling_seed)
    records = eval_dataset.records
    seed_indices = sample_seed_indices(eval_dataset, seed_fraction, rng)
    all_seed_rows = np.sort(np.concatenate(list(seed_indices.values())))
    eval_mask = np.ones(len(records), dtype=bool)
    eval_mask[all_seed_rows] = False
    relevant = np.asarray([r.label >= 0 for r in records])[eval_mask]

    rows: list[MethodMetrics] = []

    eval_records = [r for r, keep in zip(records, eval_mask) if keep]
    clf_scores = classifier_scores(eval_records, models["classifier"], background_label)
    rows.append(_binary_metrics("classifier", clf_scores, relevant, None))

    for mode, label in (("single", "ebr_single"), ("multimodal", "ebr_multimodal")):
        matrix = embed_matrix(records, models[mode], mode)
        pooled_seeds = matrix[all_seed_rows]
        scores = max_sim_scores(matrix[eval_mask], pooled_seeds)
        p_at_k = _macro_p_at_k(matrix, eval_dataset, seed_indices, k_per_trend)
        rows.append(_binary_metrics(label, scores, relevant, p_at_k))

    return Table1Result(rows=rows, seed_fraction=seed_fraction, n_eval=int(eval_mask.sum()), fingerprint=fingerprint)


def train_models(train_dataset: SynthDataset, config: TrainConfig, modes: Sequence[str]) -> dict[str, object]:
    """Train each requested mode with an identical budget and seed.

    Contrastive modes train on trend members only: pulling the isotropic
    background together as one giant class contracts the embedding map and
    ruins locality for unseen trends. The classifier keeps the background
    records (it needs the benign class).
    """
    out: dict[str, object] = {}
    for mode in modes:
        records = train_dataset.records if mode == "classifier" else train_dataset.positives
        params, _ = train(records, config, mode)
        out[mode] = params
    return out


def table1_trial(config: ExperimentConfig, trial_seed: int) -> Table1Result:
    """One full train + evaluate pass; everything reseeded from trial_seed."""
    train_ds = gen_synthetic(replace(config.train_synth, seed=1000 * trial_seed + 1))
    eval_ds = gen_synthetic(replace(config.eval_synth, seed=1000 * trial_seed + 2))
    models = train_models(train_ds, replace(config.train, seed=trial_seed), ("single", "multimodal", "classifier"))
    return run_table1_experiment(
        eval_ds,
        models,
        config.seed_fraction,
        k_per_trend=config.k_per_trend,
        sampling_seed=1000 * trial_seed + 3,
        fingerprint=config.fingerprint(),
    )


@dataclass(frozen=True)
class SweepConfig:
    train_synth: SynthConfig = field(
        default_factory=lambda: SynthConfig(n_trends=10, size_range=(80, 160), neg_per_pos=1.0, seed=11)
    )
    eval_synth: SynthConfig = field(
        default_factory=lambda: SynthConfig(
            n_trends=10, size_range=(200, 800), neg_per_pos=10.0, sigma_c=0.35, drift_rate=0.06, seed=12
        )
    )
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=10, batch_n=32, learning_rate=3e-3))
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    repeats: int = 5
    mode: str = "multimodal"
    sampling_seed: int = 5

    def fingerprint(self) -> str:
        blob = json.dumps({"config": asdict(self), "version": __version__}, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class LossCompareConfig:
    synth: SynthConfig = field(
        default_factory=lambda: SynthConfig(n_trends=8, size_range=(150, 400), neg_per_pos=5.0, sigma_c=0.3, seed=100)
    )
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=10, batch_n=32, learning_rate=3e-3))
    k: int = 100
    seed: int = 0

    def fingerprint(self) -> str:
        blob = json.dumps({"config": asdict(self), "version": __version__}, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SweepResult:
    fractions: tuple[float, ...]
    pr_auc: np.ndarray  # (repeats, fractions)
    f1: np.ndarray
    fingerprint: str

    def median_pr_auc(self) -> np.ndarray:
        return np.median(self.pr_auc, axis=0)

    def median_f1(self) -> np.ndarray:
        return np.median(self.f1, axis=0)


def run_seed_sweep(
    eval_dataset: SynthDataset,
    params,
    mode: str = "multimodal",
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    *,
    repeats: int = 5,
    sampling_seed: int = 0,
    fingerprint: str = "",
) -> SweepResult:
    """PR-AUC and best-F1 across seed fractions, nested per repeat.

    Within one repeat every trend's members are permuted once; the seeds
    for fraction f are the first max(1, round(f * size)) of that
    permutation, so smaller fractions are prefixes of larger ones. The
    candidate pool excludes the largest fraction's seed union for every
    fraction, keeping the scored item set constant along the series.
    """
    fractions = tuple(sorted(fractions))
    matrix = embed_matrix(eval_dataset.records, params, mode)
    labels = np.asarray([r.label for r in eval_dataset.records])
    by_trend = {
        label: np.flatnonzero(labels == label) for label in range(eval_dataset.config.n_trends)
    }
    pr = np.empty((repeats, len(fractions)))
    f1s = np.empty((repeats, len(fractions)))
    for rep in range(repeats):
        rng = np.random.default_rng(sampling_seed + rep)
        perms = {label: rng.permutation(idx) for label, idx in by_trend.items()}
        max_counts = {
            label: max(1, int(round(fractions[-1] * len(idx)))) for label, idx in by_trend.items()
        }
        max_union = np.concatenate([perms[label][: max_counts[label]] for label in sorted(perms)])
        mask = np.ones(len(labels), dtype=bool)
        mask[max_union] = False
        pool = matrix[mask]
        pool_relevant = labels[mask] >= 0
        for fi, fraction in enumerate(fractions):
            seed_rows = np.concatenate(
                [
                    perms[label][: max(1, int(round(fraction * len(by_trend[label]))))]
                    for label in sorted(perms)
                ]
            )
            scores = max_sim_scores(pool, matrix[seed_rows])
            pairs = list(zip(scores.tolist(), pool_relevant.tolist()))
            pr[rep, fi] = pr_auc(pairs)
            f1s[rep, fi] = best_f1(pairs)[0]
    return SweepResult(fractions=fractions, pr_auc=pr, f1=f1s, fingerprint=fingerprint)


@dataclass
class LossComparisonResult:
    p_at_k: dict[str, float]  # mode -> macro P@k on the held-out split
    k: int
    fingerprint: str


def run_loss_comparison(
    dataset: SynthDataset,
    config: TrainConfig,
    *,
    k: int = 100,
    holdout_fraction: float = 0.3,
    seed_fraction: float = 0.05,
    sampling_seed: int = 0,
    fingerprint: str = "",
) -> LossComparisonResult:
    """Train all three loss modes with one budget; compare retrieval P@k.

    Members of every trend are split train/holdout; encoders train on the
    train side (plus negatives), retrieval runs over the holdout side with
    per-trend seeds drawn from the holdout members themselves.
    """
    rng = np.random.default_rng(sampling_seed)
    labels = np.asarray([r.label for r in dataset.records])
    holdout = np.zeros(len(labels), dtype=bool)
    for label in range(dataset.config.n_trends):
        members = np.flatnonzero(labels == label)
        picked = rng.choice(members, size=max(1, int(round(holdout_fraction * len(members)))), replace=False)
        holdout[picked] = True
    negatives = np.flatnonzero(labels < 0)
    if negatives.size:
        picked = rng.choice(negatives, size=max(1, int(round(holdout_fraction * negatives.size))), replace=False)
        holdout[picked] = True

    train_records = [r for r, h in zip(dataset.records, holdout) if not h]
    eval_records = [r for r, h in zip(dataset.records, holdout) if h]
    eval_labels = np.asarray([r.label for r in eval_records])

    seed_sets: dict[int, np.ndarray] = {}
    for label in range(dataset.config.n_trends):
        members = np.flatnonzero(eval_labels == label)
        count = max(1, int(round(seed_fraction * len(members))))
        seed_sets[label] = rng.choice(members, size=min(count, len(members)), replace=False)

    results: dict[str, float] = {}
    modes = ["single", "ntxent"]
    if len({r.label for r in train_records}) >= 2:
        modes.append("classifier")  # undefined with a single class
    for mode in modes:
        contrastive = [r for r in train_records if r.label >= 0] if mode != "classifier" else train_records
        params, _ = train(contrastive or train_records, config, mode)
        matrix = embed_matrix(eval_records, params, "single" if mode == "ntxent" else mode)
        values = []
        for label, seed_idx in sorted(seed_sets.items()):
            mask = np.ones(len(eval_labels), dtype=bool)
            mask[seed_idx] = False
            scores = max_sim_scores(matrix[mask], matrix[seed_idx])
            relevant = eval_labels[mask] == label
            values.append(precision_at_k(list(zip(scores.tolist(), relevant.tolist())), k))
        results[mode] = float(np.mean(values))
    return LossComparisonResult(p_at_k=results, k=k, fingerprint=fingerprint)


def sweep_trial(config: SweepConfig) -> SweepResult:
    """Train once, then sweep seed fractions on the sweep corpus."""
    train_ds = gen_synthetic(config.train_synth)
    eval_ds = gen_synthetic(config.eval_synth)
    models = train_models(train_ds, config.train, (config.mode,))
    return run_seed_sweep(
        eval_ds,
        models[config.mode],
        config.mode,
        config.fractions,
        repeats=config.repeats,
        sampling_seed=config.sampling_seed,
        fingerprint=config.fingerprint(),
    )


def loss_comparison_trial(config: LossCompareConfig, trial_seed: int) -> LossComparisonResult:
    ds = gen_synthetic(replace(config.synth, seed=config.synth.seed + trial_seed))
    return run_loss_comparison(
        ds,
        replace(config.train, seed=trial_seed),
        k=config.k,
        sampling_seed=trial_seed,
        fingerprint=config.fingerprint(),
    )


# ---------------------------------------------------------------------------
# Result writers


def write_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_json_summary(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")


_SVG_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd")


def write_svg_series(
    path: str | Path,
    x: Sequence[float],
    series: dict[str, Sequence[float]],
    *,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 640,
    height: int = 400,
) -> None:
    """Minimal static SVG line chart (no plotting dependency)."""
    margin = 60
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    xs = np.asarray(x, dtype=np.float64)
    all_y = np.concatenate([np.asarray(v, dtype=np.float64) for v in series.values()])
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    if y_hi - y_lo < 1e-9:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    x_lo, x_hi = float(xs.min()), float(xs.max())
    if x_hi - x_lo < 1e-9:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5

    def px(v: float) -> float:
        return margin + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return height - margin - (v - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle">{x_label}</text>',
        f'<text x="16" y="{height / 2}" text-anchor="middle" transform="rotate(-90 16 {height / 2})">{y_label}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    for tick in np.linspace(y_lo, y_hi, 5):
        parts.append(
            f'<text x="{margin - 6}" y="{py(tick) + 4}" text-anchor="end">{tick:.3f}</text>'
        )
        parts.append(
            f'<line x1="{margin - 4}" y1="{py(tick)}" x2="{margin}" y2="{py(tick)}" stroke="black"/>'
        )
    for tick in xs:
        parts.append(
            f'<text x="{px(tick)}" y="{height - margin + 16}" text-anchor="middle">{tick:g}</text>'
        )
    for i, (name, values) in enumerate(series.items()):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        points = " ".join(f"{px(xv):.1f},{py(yv):.1f}" for xv, yv in zip(xs, values))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{width - margin + 4}" y="{margin + 16 * i + 10}" fill="{color}">{name}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts), encoding="utf-8")
