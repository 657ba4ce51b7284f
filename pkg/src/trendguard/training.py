"""Contrastive training loop, augmentation, and model/dataset serialization.

Training modes:
    single      supervised contrastive loss over the tanh MLP encoder
    multimodal  supervised contrastive loss over the cross-attention encoder
    ntxent      self-supervised variant: the only positive is the augmented twin
    classifier  cross-entropy softmax head on the single-modal trunk; the
                projection (penultimate) layer doubles as the embedding

Everything is deterministic for a fixed config seed: one Generator drives
shuffling and augmentation, and batches are processed in shuffle order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .encoders import (
    ClassifierParams,
    MultiModalParams,
    SingleModalParams,
    classifier_backward,
    classifier_embed,
    classifier_forward,
    multimodal_backward,
    multimodal_forward,
    param_arrays,
    single_backward,
    single_forward,
)
from .errors import ConfigError
from .scl import ntxent_labels, scl_loss, scl_loss_grad
from .store import VectorStore

MODES = ("single", "multimodal", "ntxent", "classifier")

MANIFEST_MAGIC = b"EBRM"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class Record:
    """One labeled item: per-modality feature tokens plus metadata."""

    item_id: str
    label: int  # trend index, or -1 for background/negative
    visual: np.ndarray  # (T_v, d_v)
    text: np.ndarray  # (T_t, d_t)
    timestamp: float = 0.0


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_n: int = 32
    learning_rate: float = 1e-2
    tau: float = 0.1
    sigma: float = 0.05
    dropout_p: float = 0.1
    seed: int = 0
    optimizer: str = "adam"
    hidden: int = 32
    d_model: int = 16
    out_dim: int = 64

    def validate(self) -> None:
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.batch_n < 1:
            raise ConfigError("batch size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if self.tau <= 0:
            raise ConfigError("temperature must be positive")
        if self.sigma < 0:
            raise ConfigError("augmentation noise must be >= 0")
        if not 0 <= self.dropout_p < 1:
            raise ConfigError("dropout probability must be in [0, 1)")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")


def augment(features: np.ndarray, sigma: float, dropout_p: float, rng: np.random.Generator):
    """Two independent augmented views of one feature array.

    Each view adds Gaussian noise N(0, sigma^2) per component, then zeroes
    each component independently with probability dropout_p.
    """
    if sigma < 0 or not 0 <= dropout_p < 1:
        raise ConfigError("sigma must be >= 0 and dropout_p in [0, 1)")
    features = np.asarray(features, dtype=np.float64)

    def one_view():
        if sigma > 0:
            view = features + rng.normal(0.0, sigma, size=features.shape)
        else:
            view = features.copy()
        if dropout_p > 0:
            view = np.where(rng.random(features.shape) < dropout_p, 0.0, view)
        return view

    return one_view(), one_view()


class _Adam:
    def __init__(self, arrays: dict[str, np.ndarray], lr: float):
        self.lr = lr
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.m = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in arrays.items()}
        self.t = 0

    def step(self, arrays: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * (g * g)
            arrays[name] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class _Sgd:
    def __init__(self, arrays: dict[str, np.ndarray], lr: float):
        self.lr = lr

    def step(self, arrays: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, g in grads.items():
            arrays[name] -= self.lr * g


def _make_optimizer(config: TrainConfig, arrays: dict[str, np.ndarray]):
    return _Adam(arrays, config.learning_rate) if config.optimizer == "adam" else _Sgd(arrays, config.learning_rate)


def _flat_visual(records: Sequence[Record]) -> np.ndarray:
    return np.stack([r.visual.reshape(-1) for r in records]).astype(np.float64)


def _class_index(records: Sequence[Record]) -> dict[int, int]:
    return {label: i for i, label in enumerate(sorted({r.label for r in records}))}


def init_params(records: Sequence[Record], config: TrainConfig, mode: str, rng: np.random.Generator):
    sample = records[0]
    t_v, d_v = np.asarray(sample.visual).shape
    d_t = np.asarray(sample.text).shape[1]
    if mode in ("single", "ntxent"):
        return SingleModalParams.create(t_v * d_v, config.hidden, config.out_dim, rng)
    if mode == "multimodal":
        return MultiModalParams.create(d_v, d_t, config.d_model, config.out_dim, rng)
    if mode == "classifier":
        class_labels = tuple(sorted({r.label for r in records}))
        params = ClassifierParams.create(t_v * d_v, config.hidden, config.out_dim, len(class_labels), rng)
        params.class_labels = class_labels
        return params
    raise ConfigError(f"unknown mode {mode!r}")


def train(records: Sequence[Record], config: TrainConfig, mode: str):
    """Train an encoder on labeled records. Returns (params, per-epoch mean loss).

    SCL and classifier modes require at least two distinct labels; ntxent
    ignores labels entirely.
    """
    config.validate()
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if not records:
        raise ConfigError("cannot train on an empty dataset")
    labels_present = {r.label for r in records}
    # contrastive modes stay well-defined with one class (the view twin is
    # always a positive); the classifier head genuinely needs two
    if mode == "classifier" and len(labels_present) < 2:
        raise ConfigError(f"classifier mode needs >= 2 classes, found {len(labels_present)}")

    rng = np.random.default_rng(config.seed)
    params = init_params(records, config, mode, rng)
    arrays = param_arrays(params)
    optimizer = _make_optimizer(config, arrays)
    class_index = _class_index(records) if mode == "classifier" else None

    history: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(len(records))
        batch_losses: list[float] = []
        for start in range(0, len(order), config.batch_n):
            batch = [records[i] for i in order[start : start + config.batch_n]]
            batch_losses.append(_train_step(batch, params, arrays, optimizer, config, mode, rng, class_index))
        history.append(float(np.mean(batch_losses)))
    return params, history


def _train_step(batch, params, arrays, optimizer, config, mode, rng, class_index) -> float:
    n = len(batch)
    if mode == "multimodal":
        v1 = []
        v2 = []
        t1 = []
        t2 = []
        for r in batch:
            a, b = augment(r.visual, config.sigma, config.dropout_p, rng)
            v1.append(a)
            v2.append(b)
            a, b = augment(r.text, config.sigma, config.dropout_p, rng)
            t1.append(a)
            t2.append(b)
        visual = np.stack(v1 + v2)
        text = np.stack(t1 + t2)
        z, cache = multimodal_forward(visual, text, params)
        labels = np.tile([r.label for r in batch], 2)
        loss = scl_loss(z, labels, config.tau)
        dz = scl_loss_grad(z, labels, config.tau)
        grads = multimodal_backward(dz, cache, params)
        optimizer.step(arrays, grads)
        return loss

    feats1 = []
    feats2 = []
    for r in batch:
        a, b = augment(r.visual.reshape(-1), config.sigma, config.dropout_p, rng)
        feats1.append(a)
        feats2.append(b)
    x = np.stack(feats1 + feats2)

    if mode in ("single", "ntxent"):
        z, cache = single_forward(x, params)
        labels = ntxent_labels(n) if mode == "ntxent" else np.tile([r.label for r in batch], 2)
        loss = scl_loss(z, labels, config.tau)
        dz = scl_loss_grad(z, labels, config.tau)
        grads = single_backward(dz, cache, params)
        optimizer.step(arrays, grads)
        return loss

    # classifier: cross-entropy on both augmented views
    targets = np.array([class_index[r.label] for r in batch] * 2)
    probs, _, cache = classifier_forward(x, params)
    eps = 1e-12
    loss = float(-np.mean(np.log(probs[np.arange(2 * n), targets] + eps)))
    dlogits = probs.copy()
    dlogits[np.arange(2 * n), targets] -= 1.0
    dlogits /= 2 * n
    grads = classifier_backward(dlogits, cache, params)
    optimizer.step(arrays, grads)
    return loss


def _encode_batch(records: Sequence[Record], params, mode: str) -> np.ndarray:
    if mode == "multimodal":
        z, _ = multimodal_forward(
            np.stack([np.asarray(r.visual, dtype=np.float64) for r in records]),
            np.stack([np.asarray(r.text, dtype=np.float64) for r in records]),
            params,
        )
        return z.astype(np.float32)
    x = _flat_visual(records)
    if mode == "classifier":
        return classifier_embed(x, params)
    z, _ = single_forward(x, params)
    return z.astype(np.float32)


def embed_dataset(records: Sequence[Record], params, mode: str, *, chunk: int = 4096) -> VectorStore:
    """Deterministically encode every record into a VectorStore keyed by item id."""
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    out_dim = params.trunk.out_dim if mode == "classifier" else params.out_dim
    store = VectorStore(out_dim)
    for start in range(0, len(records), chunk):
        part = records[start : start + chunk]
        z = _encode_batch(part, params, mode)
        store.insert_many([(r.item_id, z[i]) for i, r in enumerate(part)])
    return store


def classifier_scores(records: Sequence[Record], params: ClassifierParams, background_label: int = -1) -> np.ndarray:
    """Risk score per record: 1 - P(background) under the softmax head."""
    background_class = params.class_index(background_label)
    scores = np.empty(len(records))
    for start in range(0, len(records), 4096):
        part = records[start : start + 4096]
        probs, _, _ = classifier_forward(_flat_visual(part), params)
        scores[start : start + len(part)] = 1.0 - probs[:, background_class]
    return scores


# ---------------------------------------------------------------------------
# Dataset JSONL format: {"id", "label", "visual", "text", "timestamp"?}


def save_dataset(records: Iterable[Record], path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "id": r.item_id,
                        "label": int(r.label),
                        "visual": np.asarray(r.visual, dtype=np.float32).tolist(),
                        "text": np.asarray(r.text, dtype=np.float32).tolist(),
                        "timestamp": float(r.timestamp),
                    }
                )
            )
            fh.write("\n")


def load_dataset(path: str | Path) -> list[Record]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            records.append(
                Record(
                    item_id=str(row["id"]),
                    label=int(row["label"]),
                    visual=np.asarray(row["visual"], dtype=np.float64),
                    text=np.asarray(row["text"], dtype=np.float64),
                    timestamp=float(row.get("timestamp", 0.0)),
                )
            )
    return records


# ---------------------------------------------------------------------------
# Trained-params serialization: JSON manifest + one binary matrices file.
# Matrix record: {name_len u16, name UTF-8, rows u32, cols u32, row-major f32}.


_PARAM_CLASSES = {
    "single": SingleModalParams,
    "ntxent": SingleModalParams,
    "multimodal": MultiModalParams,
    "classifier": ClassifierParams,
}


def _write_matrices(arrays: dict[str, np.ndarray], path: Path) -> None:
    with open(path, "wb") as fh:
        fh.write(MANIFEST_MAGIC)
        fh.write(struct.pack("<II", MANIFEST_VERSION, len(arrays)))
        for name, arr in sorted(arrays.items()):
            mat = np.atleast_2d(np.asarray(arr, dtype=np.float64)).astype("<f4")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<II", mat.shape[0], mat.shape[1]))
            fh.write(mat.tobytes(order="C"))


def _read_matrices(path: Path) -> dict[str, np.ndarray]:
    data = path.read_bytes()
    if data[:4] != MANIFEST_MAGIC:
        raise ConfigError(f"{path}: bad matrices file magic")
    version, count = struct.unpack_from("<II", data, 4)
    if version != MANIFEST_VERSION:
        raise ConfigError(f"{path}: unsupported matrices version {version}")
    offset = 12
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        rows, cols = struct.unpack_from("<II", data, offset)
        offset += 8
        mat = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=offset)
        offset += 4 * rows * cols
        out[name] = mat.reshape(rows, cols).astype(np.float64)
    return out


def _rebuild_params(mode: str, entry: dict, arrays: dict[str, np.ndarray]):
    cls = _PARAM_CLASSES[mode]
    shapes = entry["shapes"]
    restored = {name: arrays[name].reshape(shapes[name]) for name in shapes}
    if cls is ClassifierParams:
        trunk_kwargs = {k.split(".", 1)[1]: v for k, v in restored.items() if k.startswith("trunk.")}
        head_kwargs = {k: v for k, v in restored.items() if not k.startswith("trunk.")}
        return ClassifierParams(
            trunk=SingleModalParams(**trunk_kwargs),
            class_labels=tuple(entry.get("class_labels", ())),
            **head_kwargs,
        )
    return cls(**restored)


def save_manifest(encoders: dict[str, object], path: str | Path, *, extra: dict | None = None) -> None:
    """Persist one or more trained encoders next to a JSON manifest.

    `encoders` maps mode name (single/multimodal/classifier/ntxent) to its
    params object. Matrices land in <stem>.params.bin beside the manifest.
    """
    path = Path(path)
    matrices_path = path.with_suffix(".params.bin")
    all_arrays: dict[str, np.ndarray] = {}
    entries: dict[str, dict] = {}
    for mode, params in encoders.items():
        if mode not in _PARAM_CLASSES:
            raise ConfigError(f"unknown encoder mode {mode!r}")
        arrays = param_arrays(params)
        shapes = {name: list(arr.shape) for name, arr in arrays.items()}
        entries[mode] = {"shapes": shapes}
        if isinstance(params, ClassifierParams):
            entries[mode]["class_labels"] = list(params.class_labels)
        for name, arr in arrays.items():
            all_arrays[f"{mode}.{name}"] = arr
    _write_matrices(all_arrays, matrices_path)
    manifest = {
        "version": MANIFEST_VERSION,
        "matrices_file": matrices_path.name,
        "encoders": entries,
    }
    if extra:
        manifest["meta"] = extra
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")


def load_manifest(path: str | Path) -> dict[str, object]:
    """Load encoders saved by save_manifest: mode name -> params object."""
    path = Path(path)
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("version") != MANIFEST_VERSION:
        raise ConfigError(f"{path}: unsupported manifest version")
    arrays = _read_matrices(path.parent / manifest["matrices_file"])
    out: dict[str, object] = {}
    for mode, entry in manifest["encoders"].items():
        scoped = {
            name[len(mode) + 1 :]: arr for name, arr in arrays.items() if name.startswith(f"{mode}.")
        }
        out[mode] = _rebuild_params(mode, entry, scoped)
    return out
