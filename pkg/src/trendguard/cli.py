"""Command-line interface: seed selection, retrieval, experiments, serving.

State-backed commands (seed historical/add, retrieve) operate on the same
data directory and model manifest as the service, so the CLI and HTTP
surfaces always agree on state.
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .errors import ConfigError, CorruptEventLog, TrendGuardError
from .experiments import (
    ExperimentConfig,
    LossCompareConfig,
    SweepConfig,
    loss_comparison_trial,
    sweep_trial,
    table1_trial,
    write_csv,
    write_json_summary,
    write_svg_series,
)
from .seeds import centroid_proximity_seeds, dbscan, select_historical_seeds
from .service import ServiceConfig, ServiceState, load_service_config
from .store import load_vectors
from .synthetic import SynthConfig, gen_synthetic
from .training import TrainConfig, save_dataset
from .trends import retrieve_trend

EXIT_CONFIG_ERROR = 2
EXIT_CORRUPT_LOG = 3


def _load_nested(path: str | None, cls, nested: dict[str, type] | None = None):
    """Build a config dataclass from a JSON file of overrides."""
    if path is None:
        return cls()
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    nested = nested or {}
    kwargs = {}
    for key, value in raw.items():
        if key in nested:
            if "size_range" in value:
                value = dict(value, size_range=tuple(value["size_range"]))
            if "fractions" in value:
                value = dict(value, fractions=tuple(value["fractions"]))
            kwargs[key] = nested[key](**value)
        elif key == "size_range":
            kwargs[key] = tuple(value)
        elif key == "fractions":
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def _open_state(config_path: str | None, data_dir: str | None, manifest: str | None) -> ServiceState:
    if config_path:
        config = load_service_config(config_path)
        if data_dir:
            config = replace(config, data_dir=data_dir)
        if manifest:
            config = replace(config, model_manifest=manifest)
    else:
        if not data_dir or not manifest:
            raise ConfigError("provide --config, or both --data-dir and --manifest")
        config = ServiceConfig(data_dir=data_dir, model_manifest=manifest)
    return ServiceState(config)


@click.group()
def main():
    """Embedding-based retrieval for moderation trend handling."""


# ---------------------------------------------------------------------------
# seed


@main.group()
def seed():
    """Seed selection: clustering, historical gating, manual registration."""


@seed.command("cluster")
@click.option("--vectors", "vectors_path", required=True, type=click.Path(exists=True), help="Binary vector file.")
@click.option("--eps", default=0.3, show_default=True, help="Cosine-distance neighborhood radius.")
@click.option("--min-pts", default=3, show_default=True, help="Core point neighbor floor (self included).")
@click.option("--seeds-per-cluster", default=5, show_default=True)
def seed_cluster(vectors_path, eps, min_pts, seeds_per_cluster):
    """Cluster a vector file with DBSCAN and print centroid-proximity seeds."""
    store = load_vectors(vectors_path)
    assignment = dbscan(store, eps, min_pts)
    out = {"eps": eps, "min_pts": min_pts, "clusters": []}
    for cid, members in enumerate(assignment.clusters()):
        seeds = centroid_proximity_seeds(store, assignment, cid, seeds_per_cluster)
        out["clusters"].append({"cluster_id": cid, "size": len(members), "seeds": seeds})
    noise = sorted(i for i, l in assignment.labels.items() if l == -1)
    out["noise_count"] = len(noise)
    click.echo(json.dumps(out, indent=2))


@seed.command("historical")
@click.option("--config", "config_path", type=click.Path(exists=True), help="Service config JSON.")
@click.option("--data-dir", type=click.Path())
@click.option("--manifest", type=click.Path())
@click.option("--trend", "trend_id", required=True)
@click.option("--threshold", default=0.8, show_default=True, help="Strict precision gate.")
@click.option("--min-n", default=20, show_default=True)
@click.option("--window", default=86400.0, show_default=True, help="Window length in event-time seconds.")
@click.option("--end", "window_end", default=None, type=float, help="Window end (default: latest decision).")
def seed_historical(config_path, data_dir, manifest, trend_id, threshold, min_n, window, window_end):
    """Seeds of a trend whose windowed precision clears the gate."""
    state = _open_state(config_path, data_dir, manifest)
    if trend_id not in state.trends:
        raise click.ClickException(f"unknown trend {trend_id}")
    entry = state.trends[trend_id]
    if window_end is None:
        window_end = max((d.decided_at for d in entry.book.decisions.values()), default=0.0)
    stats = entry.book.seed_stats(window_end - window, window_end)
    accepted = select_historical_seeds(list(stats.values()), threshold, min_n)
    rows = [
        {"seed_id": s, "n": stats[s].n, "r": stats[s].r, "precision": stats[s].r / stats[s].n}
        for s in accepted
    ]
    click.echo(json.dumps({"trend_id": trend_id, "window": [window_end - window, window_end], "accepted": rows}, indent=2))


@seed.command("add")
@click.option("--config", "config_path", type=click.Path(exists=True), help="Service config JSON.")
@click.option("--data-dir", type=click.Path())
@click.option("--manifest", type=click.Path())
@click.option("--trend", "trend_id", required=True)
@click.option("--item", "item_id", required=True)
@click.option("--annotator", default="cli")
def seed_add(config_path, data_dir, manifest, trend_id, item_id, annotator):
    """Register a manual golden seed (idempotent per trend and item)."""
    state = _open_state(config_path, data_dir, manifest)
    try:
        detail = state.add_seed(trend_id, {"item_id": item_id, "annotator": annotator, "provenance": "manual"})
    except Exception as exc:  # ApiFault carries the code
        raise click.ClickException(getattr(exc, "message", str(exc))) from exc
    finally:
        state.close()
    click.echo(json.dumps(detail, indent=2))


# ---------------------------------------------------------------------------
# retrieve


@main.command("retrieve")
@click.option("--config", "config_path", type=click.Path(exists=True), help="Service config JSON.")
@click.option("--data-dir", type=click.Path())
@click.option("--manifest", type=click.Path())
@click.option("--trend", "trend_id", required=True)
@click.option("--k", default=200, show_default=True, help="Per-seed candidate recall depth.")
def retrieve(config_path, data_dir, manifest, trend_id, k):
    """Ranked trend candidates as JSON-lines of trend scores."""
    state = _open_state(config_path, data_dir, manifest)
    if trend_id not in state.trends:
        raise click.ClickException(f"unknown trend {trend_id}")
    entry = state.trends[trend_id]
    store = state.stores[entry.trend.modality]
    try:
        scores = retrieve_trend(entry.trend, store, k_per_seed=k)
    except TrendGuardError as exc:
        raise click.ClickException(str(exc)) from exc
    finally:
        state.close()
    for ts in scores:
        click.echo(
            json.dumps(
                {
                    "video_id": ts.video_id,
                    "trend_id": ts.trend_id,
                    "score": ts.score,
                    "best_seed_id": ts.best_seed_id,
                    "computed_at": ts.computed_at,
                }
            )
        )


# ---------------------------------------------------------------------------
# eval


@main.group("eval")
def eval_group():
    """Synthetic data generation and offline experiments."""


@eval_group.command("gen")
@click.option("--config", "config_path", type=click.Path(exists=True), help="SynthConfig overrides JSON.")
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_gen(config_path, out_path):
    """Generate a synthetic labeled corpus as dataset JSON-lines."""
    config = _load_nested(config_path, SynthConfig)
    dataset = gen_synthetic(config)
    save_dataset(dataset.records, out_path)
    click.echo(
        json.dumps(
            {
                "out": str(out_path),
                "records": len(dataset.records),
                "positives": len(dataset.positives),
                "negatives": len(dataset.negatives),
                "fingerprint": config.fingerprint(),
            }
        )
    )


def _experiment_config(config_path):
    return _load_nested(
        config_path,
        ExperimentConfig,
        nested={"eval_synth": SynthConfig, "train_synth": SynthConfig, "train": TrainConfig},
    )


@eval_group.command("table1")
@click.option("--config", "config_path", type=click.Path(exists=True), help="ExperimentConfig overrides JSON.")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--trials", default=5, show_default=True)
def eval_table1(config_path, out_dir, trials):
    """Method comparison on unseen trends: classifier vs both retrieval variants."""
    config = _experiment_config(config_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    per_trial = []
    for t in range(trials):
        result = table1_trial(config, t)
        per_trial.append(result)
        for m in result.rows:
            rows.append([t, m.method, m.p_at_k, m.pr_auc, m.roc_auc, m.f1, m.f1_threshold])
    write_csv(out_dir / "table1.csv", ["trial", "method", "p_at_200", "pr_auc", "roc_auc", "f1", "f1_threshold"], rows)
    methods = [m.method for m in per_trial[0].rows]
    medians = {
        method: {
            metric: float(np.median([r.by_method()[method].__getattribute__(metric) for r in per_trial]))
            for metric in ("pr_auc", "roc_auc", "f1")
        }
        for method in methods
    }
    for method in methods:
        p_values = [r.by_method()[method].p_at_k for r in per_trial]
        medians[method]["p_at_200"] = None if p_values[0] is None else float(np.median(p_values))
    summary = {"fingerprint": config.fingerprint(), "trials": trials, "medians": medians, "p_at_k_macro": "macro-averaged over trends"}
    write_json_summary(out_dir / "table1.json", summary)
    click.echo(json.dumps(summary, indent=2))


@eval_group.command("sweep")
@click.option("--config", "config_path", type=click.Path(exists=True), help="SweepConfig overrides JSON.")
@click.option("--out-dir", required=True, type=click.Path())
def eval_sweep(config_path, out_dir):
    """Seed-fraction sweep: PR-AUC and best-F1 series with plot data."""
    config = _load_nested(
        config_path, SweepConfig, nested={"eval_synth": SynthConfig, "train_synth": SynthConfig, "train": TrainConfig}
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = sweep_trial(config)
    rows = []
    for rep in range(result.pr_auc.shape[0]):
        for fi, fraction in enumerate(result.fractions):
            rows.append([rep, fraction, result.pr_auc[rep, fi], result.f1[rep, fi]])
    write_csv(out_dir / "sweep.csv", ["repeat", "fraction", "pr_auc", "f1"], rows)
    med_pr = result.median_pr_auc()
    med_f1 = result.median_f1()
    write_svg_series(
        out_dir / "sweep.svg",
        [f * 100 for f in result.fractions],
        {"PR-AUC (median)": med_pr.tolist(), "best F1 (median)": med_f1.tolist()},
        title="Retrieval quality vs seed percentage",
        x_label="seed percentage",
        y_label="score",
    )
    summary = {
        "fingerprint": result.fingerprint,
        "fractions": list(result.fractions),
        "median_pr_auc": med_pr.tolist(),
        "median_f1": med_f1.tolist(),
    }
    write_json_summary(out_dir / "sweep.json", summary)
    click.echo(json.dumps(summary, indent=2))


@eval_group.command("losses")
@click.option("--config", "config_path", type=click.Path(exists=True), help="LossCompareConfig overrides JSON.")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--trials", default=5, show_default=True)
def eval_losses(config_path, out_dir, trials):
    """Loss ablation: contrastive vs twin-only vs classifier embeddings."""
    config = _load_nested(config_path, LossCompareConfig, nested={"synth": SynthConfig, "train": TrainConfig})
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    results = []
    for t in range(trials):
        result = loss_comparison_trial(config, t)
        results.append(result)
        for mode, value in result.p_at_k.items():
            rows.append([t, mode, value])
    write_csv(out_dir / "losses.csv", ["trial", "mode", f"p_at_{config.k}"], rows)
    medians = {
        mode: float(np.median([r.p_at_k[mode] for r in results])) for mode in results[0].p_at_k
    }
    summary = {"fingerprint": config.fingerprint(), "trials": trials, "k": config.k, "median_p_at_k": medians}
    write_json_summary(out_dir / "losses.json", summary)
    click.echo(json.dumps(summary, indent=2))


# ---------------------------------------------------------------------------
# serve


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(), help="Service config JSON.")
def serve(config_path):
    """Run the HTTP service (exit 2 on config error, 3 on corrupt log)."""
    import uvicorn

    from .service import create_app

    try:
        config = load_service_config(config_path)
        app = create_app(config)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    except CorruptEventLog as exc:
        click.echo(f"corrupt event log: {exc}", err=True)
        sys.exit(EXIT_CORRUPT_LOG)
    host, _, port = config.listen_addr.rpartition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
    finally:
        app.state.service.flush_vectors()
        app.state.service.close()
    sys.exit(0)


if __name__ == "__main__":
    main()
