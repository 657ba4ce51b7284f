"""In-memory vector store with exact top-K search and a binary file format.

The store keeps an immutable snapshot (id tuple + float32 matrix) that is
swapped atomically under a writer lock, so concurrent readers never observe
a half-applied mutation. Similarities accumulate in float64; ties break by
ascending item id so results are fully deterministic.

File format (little-endian):
    header  {magic b"EBRV", version u32, dim u32, count u64}
    record  {id_len u16, id UTF-8 bytes, dim float32 values}
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import CorruptVectorFile, DimensionMismatch, DuplicateItem, UnknownItem
from .vectors import normalize

MAGIC = b"EBRV"
FORMAT_VERSION = 1
_NORM_TOLERANCE = 1e-3


class RetrievalHit(NamedTuple):
    item_id: str
    similarity: float
    rank: int


@dataclass(frozen=True)
class _Snapshot:
    ids: tuple[str, ...]
    matrix: np.ndarray  # (n, dim) float32, read-only
    index: dict[str, int]


def _empty_snapshot(dim: int) -> _Snapshot:
    m = np.zeros((0, dim), dtype=np.float32)
    m.setflags(write=False)
    return _Snapshot(ids=(), matrix=m, index={})


class VectorStore:
    """Ordered collection of (item_id, unit vector) with a fixed dimension."""

    def __init__(self, dim: int):
        if dim < 1:
            raise DimensionMismatch(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        self._lock = threading.Lock()
        self._snapshot = _empty_snapshot(self.dim)

    def __len__(self) -> int:
        return len(self._snapshot.ids)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._snapshot.index

    @property
    def ids(self) -> tuple[str, ...]:
        return self._snapshot.ids

    def snapshot(self) -> _Snapshot:
        """Current immutable snapshot (safe to read concurrently)."""
        return self._snapshot

    def _validate(self, vector) -> np.ndarray:
        vec = np.asarray(vector, dtype=np.float32).reshape(-1)
        if vec.shape[0] != self.dim:
            raise DimensionMismatch(f"expected dim {self.dim}, got {vec.shape[0]}")
        norm = float(np.linalg.norm(vec.astype(np.float64)))
        if abs(norm - 1.0) > _NORM_TOLERANCE:
            raise DimensionMismatch(f"vector for store must be unit-norm, norm={norm:.6f}")
        return vec

    def insert(self, item_id: str, vector, *, replace: bool = False) -> None:
        """Insert one unit vector. Duplicate ids are rejected unless replace=True."""
        vec = self._validate(vector)
        with self._lock:
            snap = self._snapshot
            if item_id in snap.index:
                if not replace:
                    raise DuplicateItem(item_id)
                matrix = snap.matrix.copy()
                matrix[snap.index[item_id]] = vec
                matrix.setflags(write=False)
                self._snapshot = _Snapshot(snap.ids, matrix, snap.index)
                return
            ids = snap.ids + (item_id,)
            matrix = np.vstack([snap.matrix, vec[None, :]])
            matrix.setflags(write=False)
            index = dict(snap.index)
            index[item_id] = len(ids) - 1
            self._snapshot = _Snapshot(ids, matrix, index)

    def insert_many(self, items: Iterable[tuple[str, np.ndarray]], *, replace: bool = False) -> None:
        """Bulk insert; one snapshot swap for the whole batch."""
        pairs = [(item_id, self._validate(vec)) for item_id, vec in items]
        with self._lock:
            snap = self._snapshot
            ids = list(snap.ids)
            index = dict(snap.index)
            replacements: list[tuple[int, np.ndarray]] = []
            fresh: list[np.ndarray] = []
            for item_id, vec in pairs:
                if item_id in index:
                    if not replace:
                        raise DuplicateItem(item_id)
                    replacements.append((index[item_id], vec))
                else:
                    index[item_id] = len(ids)
                    ids.append(item_id)
                    fresh.append(vec)
            parts = [snap.matrix] + ([np.stack(fresh)] if fresh else [])
            matrix = np.vstack(parts)
            for row, vec in replacements:
                matrix[row] = vec
            matrix.setflags(write=False)
            self._snapshot = _Snapshot(tuple(ids), matrix, index)

    def get(self, item_id: str) -> np.ndarray:
        snap = self._snapshot
        if item_id not in snap.index:
            raise UnknownItem(item_id)
        return snap.matrix[snap.index[item_id]]


def similarities_for(snapshot: _Snapshot, indices: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Float64 cosine of `query` against the given snapshot rows, clamped.

    Both the exact and the IVF search paths funnel through this helper so
    their per-item similarities are bitwise identical.
    """
    rows = snapshot.matrix[indices].astype(np.float64)
    sims = rows @ np.asarray(query, dtype=np.float64)
    np.clip(sims, -1.0, 1.0, out=sims)
    return sims


def rank_hits(ids: list[str], sims: np.ndarray, k: int) -> list[RetrievalHit]:
    """Top-k hits sorted by similarity descending, ties by ascending id."""
    order = sorted(range(len(ids)), key=lambda i: (-sims[i], ids[i]))[:k]
    return [
        RetrievalHit(item_id=ids[i], similarity=float(sims[i]), rank=rank)
        for rank, i in enumerate(order, start=1)
    ]


def top_k_exact(query, store: VectorStore, k: int) -> list[RetrievalHit]:
    """Exact top-k by cosine over the whole store.

    Returns all items when the store holds fewer than k; an empty store
    yields an empty list.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = np.asarray(query, dtype=np.float32).reshape(-1)
    if query.shape[0] != store.dim:
        raise DimensionMismatch(f"query dim {query.shape[0]} vs store dim {store.dim}")
    snap = store.snapshot()
    if not snap.ids:
        return []
    sims = similarities_for(snap, np.arange(len(snap.ids)), query)
    return rank_hits(list(snap.ids), sims, k)


def save_vectors(store: VectorStore, path: str | Path) -> None:
    """Write the store to the binary vector file format."""
    snap = store.snapshot()
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIQ", FORMAT_VERSION, store.dim, len(snap.ids)))
        for i, item_id in enumerate(snap.ids):
            raw = item_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"item id too long: {item_id[:32]}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(snap.matrix[i].astype("<f4").tobytes())


def load_vectors(path: str | Path) -> VectorStore:
    """Load a binary vector file, validating magic, version, and norms."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 20 or data[:4] != MAGIC:
        raise CorruptVectorFile(f"{path}: bad magic")
    version, dim, count = struct.unpack_from("<IIQ", data, 4)
    if version != FORMAT_VERSION:
        raise CorruptVectorFile(f"{path}: unsupported version {version}")
    store = VectorStore(dim)
    offset = 20
    items = []
    for _ in range(count):
        if offset + 2 > len(data):
            raise CorruptVectorFile(f"{path}: truncated record header")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + 4 * dim > len(data):
            raise CorruptVectorFile(f"{path}: truncated record body")
        item_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
        norm = float(np.linalg.norm(vec.astype(np.float64)))
        if abs(norm - 1.0) > _NORM_TOLERANCE:
            raise CorruptVectorFile(f"{path}: vector {item_id!r} not unit-norm ({norm:.6f})")
        items.append((item_id, vec))
    store.insert_many(items)
    return store


def store_from_arrays(ids: Iterable[str], matrix: np.ndarray) -> VectorStore:
    """Build a store from parallel ids/rows (rows are normalized first)."""
    matrix = np.asarray(matrix)
    store = VectorStore(matrix.shape[1])
    store.insert_many([(i, normalize(row)) for i, row in zip(ids, matrix)])
    return store
