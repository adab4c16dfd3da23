"""Loading, writing and time-bucketing of event logs."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import EmptyInput, EventError, InvalidWidth, ParseError
from .events import EventStream, PostEvent, validate_event

logger = logging.getLogger(__name__)

FIELDS = ("event_id", "timestamp", "author_id", "kind", "root_post_id",
          "root_author_id", "topics", "comment_text")


def _infer_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    if suffix == ".csv":
        return "csv"
    raise ValueError(f"cannot infer format from {path.name!r}; pass format='jsonl' or 'csv'")


def _iter_jsonl(path: Path) -> Iterator[tuple[int, PostEvent]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise ParseError(lineno, "expected a JSON object")
            try:
                yield lineno, validate_event(rec)
            except EventError as exc:
                raise ParseError(lineno, str(exc)) from exc


def _iter_csv(path: Path) -> Iterator[tuple[int, PostEvent]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        missing = {"event_id", "timestamp", "author_id", "kind"} - set(reader.fieldnames)
        if missing:
            raise ParseError(1, f"header lacks {sorted(missing)}")
        for row in reader:
            # header is line 1
            lineno = reader.line_num
            try:
                yield lineno, validate_event(row)
            except EventError as exc:
                raise ParseError(lineno, str(exc)) from exc


def load_stream(path, format: str | None = None) -> EventStream:
    """Read a JSONL or CSV event log into a sorted, de-duplicated stream.

    Duplicate event ids keep their first occurrence; the number dropped is
    reported in ``stream.metadata.duplicates_dropped``. Raises ``OSError`` for
    unreadable files, ``ParseError`` (with a line number) for malformed records
    and ``EmptyInput`` when nothing valid remains.
    """
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt == "jsonl":
        rows = _iter_jsonl(path)
    elif fmt == "csv":
        rows = _iter_csv(path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    events = [ev for _, ev in rows]
    if not events:
        raise EmptyInput(f"{path}: no events")
    stream = EventStream.from_events(events, source=str(path), dedupe=True)
    if stream.duplicates_dropped:
        logger.warning("%s: dropped %d duplicate event ids", path, stream.duplicates_dropped)
    return stream


def write_jsonl(stream: EventStream, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in stream.to_records():
            fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def write_csv(stream: EventStream, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIELDS)
        for rec in stream.to_records():
            writer.writerow([
                rec["event_id"], rec["timestamp"], rec["author_id"], rec["kind"],
                rec.get("root_post_id", ""), rec.get("root_author_id", ""),
                "|".join(rec["topics"]), rec.get("comment_text", ""),
            ])


@dataclass(frozen=True, eq=False)
class BucketedStream:
    """A stream cut into contiguous half-open buckets ``[start, start + width)``.

    The stream is time-sorted, so each bucket is a slice of it:
    ``stream[offsets[b]:offsets[b + 1]]``.
    """
    stream: EventStream
    bucket_width: int
    starts: np.ndarray
    offsets: np.ndarray

    def __len__(self):
        return int(self.starts.size)

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def bucket(self, b: int) -> tuple[int, tuple[PostEvent, ...]]:
        lo, hi = int(self.offsets[b]), int(self.offsets[b + 1])
        return int(self.starts[b]), tuple(self.stream.event_at(i) for i in range(lo, hi))

    @property
    def buckets(self) -> list[tuple[int, tuple[PostEvent, ...]]]:
        return [self.bucket(b) for b in range(len(self))]

    def flatten(self) -> EventStream:
        return self.stream


def bucketize(stream: EventStream, width: int) -> BucketedStream:
    """Assign events to epoch-aligned buckets of ``width`` seconds.

    Empty buckets between the first and last event are kept so bucket indices
    stay contiguous.
    """
    if not isinstance(width, (int, np.integer)) or isinstance(width, bool) or width <= 0:
        raise InvalidWidth(f"bucket width must be a positive integer, got {width!r}")
    width = int(width)
    if len(stream) == 0:
        return BucketedStream(stream, width, np.zeros(0, dtype=np.int64), np.zeros(1, dtype=np.int64))
    first = int(stream.timestamp[0]) // width
    last = int(stream.timestamp[-1]) // width
    starts = np.arange(first, last + 1, dtype=np.int64) * width
    offsets = np.searchsorted(stream.timestamp, np.append(starts, (last + 1) * width), side="left")
    return BucketedStream(stream, width, starts, offsets.astype(np.int64))
