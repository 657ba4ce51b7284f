"""Append-only JSON-lines event log.

Every state mutation in the service is an event; full state is a pure fold
over the log (plus the vector file as a startup cache). Events carry a
strictly increasing sequence number, a client-supplied event time, and a
separately recorded server receive time, so simulations control windows
and replays reconstruct state bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable, Iterator

from .errors import CorruptEventLog

EVENT_KINDS = (
    "video_ingested",
    "trend_created",
    "seed_added",
    "seed_removed",
    "decision",
    "label",
    "threshold_changed",
    "trend_paused",
    "trend_resumed",
)


@dataclass(frozen=True)
class EventRecord:
    seq: int
    event_time: float
    received_at: float
    kind: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))


class EventLog:
    """Durable append-only log; optionally backed by a JSONL file."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._records: list[EventRecord] = []
        self._fh = None
        if self.path is not None:
            if self.path.exists():
                self._records = list(read_event_log(self.path))
            self._fh = open(self.path, "a", encoding="utf-8")

    @property
    def next_seq(self) -> int:
        return self._records[-1].seq + 1 if self._records else 1

    def append(self, kind: str, payload: dict, event_time: float, received_at: float = 0.0) -> EventRecord:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        record = EventRecord(
            seq=self.next_seq,
            event_time=float(event_time),
            received_at=float(received_at),
            kind=kind,
            payload=payload,
        )
        self._records.append(record)
        if self._fh is not None:
            self._fh.write(record.to_json())
            self._fh.write("\n")
            self._fh.flush()
        return record

    def __iter__(self) -> Iterator[EventRecord]:
        return iter(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_event_log(path: str | Path) -> list[EventRecord]:
    """Parse a JSONL event log, reporting the byte offset of any bad record."""
    path = Path(path)
    records: list[EventRecord] = []
    offset = 0
    prev_seq = 0
    with open(path, "rb") as fh:
        for raw in fh:
            line = raw.decode("utf-8", errors="replace").strip()
            if line:
                try:
                    row = json.loads(line)
                    record = EventRecord(
                        seq=int(row["seq"]),
                        event_time=float(row["event_time"]),
                        received_at=float(row.get("received_at", 0.0)),
                        kind=str(row["kind"]),
                        payload=row["payload"],
                    )
                except (ValueError, KeyError, TypeError) as exc:
                    raise CorruptEventLog(f"{path}: {exc}", byte_offset=offset) from exc
                if record.kind not in EVENT_KINDS:
                    raise CorruptEventLog(f"{path}: unknown kind {record.kind!r}", byte_offset=offset)
                if record.seq <= prev_seq:
                    raise CorruptEventLog(
                        f"{path}: non-increasing seq {record.seq} after {prev_seq}", byte_offset=offset
                    )
                prev_seq = record.seq
                records.append(record)
            offset += len(raw)
    return records


def replay(records, handlers: dict[str, Callable[[EventRecord], None]]) -> None:
    """Fold events through per-kind handlers in sequence order."""
    for record in records:
        handler = handlers.get(record.kind)
        if handler is not None:
            handler(record)
