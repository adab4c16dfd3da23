"""
Domain types for post/retweet event data.

A stream is stored column-wise: integer code arrays plus sorted string
vocabularies for post ids, user ids and topic keys. Because every vocabulary is
sorted, comparing codes is the same as comparing the underlying strings, which
is what makes the (timestamp, event_id) ordering cheap to maintain.
``PostEvent`` records are materialized only on demand.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateEventId,
    KindLineageMismatch,
    MissingField,
    NonNumericTimestamp,
    TimestampRangeError,
)

__all__ = [
    "Kind",
    "PostEvent",
    "StreamMetadata",
    "EventStream",
    "normalize_topic",
    "validate_event",
]

NO_CODE = -1


class Kind(str, Enum):
    ORIGINAL = "original"
    RETWEET = "retweet"


def normalize_topic(key: str) -> str:
    return key.strip().casefold()


@dataclass(frozen=True, slots=True)
class PostEvent:
    """One original post or retweet."""
    event_id: str
    timestamp: int
    author_id: str
    kind: Kind
    root_post_id: str | None = None
    root_author_id: str | None = None
    topic_keys: frozenset[str] = frozenset()
    comment_text: str | None = None

    def __post_init__(self):
        if self.timestamp < 0:
            raise TimestampRangeError(f"{self.event_id}: negative timestamp {self.timestamp}")
        has_root = (self.root_post_id is not None, self.root_author_id is not None)
        if self.kind is Kind.RETWEET and not all(has_root):
            raise KindLineageMismatch(f"{self.event_id}: retweet without root_post_id/root_author_id")
        if self.kind is Kind.ORIGINAL and any(has_root):
            raise KindLineageMismatch(f"{self.event_id}: original post carries retweet lineage")

    @property
    def is_retweet(self) -> bool:
        return self.kind is Kind.RETWEET

    def to_record(self) -> dict:
        """Plain dict using the JSONL field names; optional fields omitted when absent."""
        rec = {
            "event_id": self.event_id,
            "timestamp": self.timestamp,
            "author_id": self.author_id,
            "kind": self.kind.value,
        }
        if self.root_post_id is not None:
            rec["root_post_id"] = self.root_post_id
            rec["root_author_id"] = self.root_author_id
        rec["topics"] = sorted(self.topic_keys)
        if self.comment_text is not None:
            rec["comment_text"] = self.comment_text
        return rec


_REQUIRED = ("event_id", "timestamp", "author_id", "kind")


def _parse_timestamp(value, event_id) -> int:
    if isinstance(value, bool):
        raise NonNumericTimestamp(f"{event_id}: timestamp {value!r} is not numeric")
    if isinstance(value, int):
        ts = value
    elif isinstance(value, float):
        if not math.isfinite(value) or not value.is_integer():
            raise NonNumericTimestamp(f"{event_id}: timestamp {value!r} is not an integer")
        ts = int(value)
    else:
        text = str(value).strip()
        try:
            ts = int(text)
        except ValueError:
            raise NonNumericTimestamp(f"{event_id}: timestamp {value!r} is not an integer") from None
    if ts < 0:
        raise TimestampRangeError(f"{event_id}: negative timestamp {ts}")
    return ts


def _optional_text(value) -> str | None:
    if value is None:
        return None
    text = str(value)
    return text if text != "" else None


def validate_event(candidate: Mapping) -> PostEvent:
    """Check a raw record and turn it into a ``PostEvent``.

    ``topics`` may be a list of strings or a ``|``-separated string; keys are
    case-folded and trimmed, and empty keys are dropped.
    """
    for name in _REQUIRED:
        if name not in candidate or candidate[name] is None or str(candidate[name]) == "":
            raise MissingField(name)
    event_id = str(candidate["event_id"])
    ts = _parse_timestamp(candidate["timestamp"], event_id)
    try:
        kind = Kind(str(candidate["kind"]).strip().lower())
    except ValueError:
        raise KindLineageMismatch(f"{event_id}: unknown kind {candidate['kind']!r}") from None

    topics = candidate.get("topics", ())
    if topics is None:
        topics = ()
    elif isinstance(topics, str):
        topics = topics.split("|")
    keys = frozenset(k for k in (normalize_topic(str(t)) for t in topics) if k)

    return PostEvent(
        event_id=event_id,
        timestamp=ts,
        author_id=str(candidate["author_id"]),
        kind=kind,
        root_post_id=_optional_text(candidate.get("root_post_id")),
        root_author_id=_optional_text(candidate.get("root_author_id")),
        topic_keys=keys,
        comment_text=_optional_text(candidate.get("comment_text")),
    )


@dataclass(frozen=True)
class StreamMetadata:
    source: str | None
    event_count: int
    retweet_count: int
    time_span: tuple[int, int] | None
    duplicates_dropped: int = 0

    @property
    def original_count(self) -> int:
        return self.event_count - self.retweet_count

    @property
    def retweet_share(self) -> float:
        return self.retweet_count / self.event_count if self.event_count else 0.0

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "event_count": self.event_count,
            "retweet_count": self.retweet_count,
            "original_count": self.original_count,
            "retweet_share": self.retweet_share,
            "time_span": list(self.time_span) if self.time_span else None,
            "duplicates_dropped": self.duplicates_dropped,
        }


# -- vocabulary helpers -------------------------------------------------------

def _as_vocab(values) -> np.ndarray:
    arr = np.asarray(values, dtype=str)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    return arr


def _is_strictly_sorted(arr: np.ndarray) -> bool:
    return arr.size < 2 or bool(np.all(arr[1:] > arr[:-1]))


def _merge_pair(a: np.ndarray, b: np.ndarray):
    """Union of two sorted unique vocabularies with code remaps for each."""
    if b.size == 0:
        return a, np.arange(a.size), np.arange(0)
    if a.size == 0:
        return b, np.arange(0), np.arange(b.size)
    a = a.astype(np.result_type(a.dtype, b.dtype), copy=False)  # np.insert would truncate b
    pos = np.searchsorted(a, b)
    found = (pos < a.size) & (a[np.minimum(pos, a.size - 1)] == b)
    new = b[~found]
    new_pos = pos[~found]
    merged = np.insert(a, new_pos, new)
    shift = np.cumsum(np.bincount(new_pos, minlength=a.size + 1))[: a.size]
    remap_a = np.arange(a.size) + shift
    remap_b = np.empty(b.size, dtype=np.int64)
    remap_b[found] = remap_a[pos[found]]
    remap_b[~found] = new_pos + np.arange(new.size)
    return merged, remap_a, remap_b


def merge_vocabs(vocabs: Sequence[np.ndarray]):
    """Merge sorted unique vocabularies; returns (merged, [remap per input])."""
    vocabs = [_as_vocab(v) for v in vocabs]
    nonempty = [k for k, v in enumerate(vocabs) if v.size]
    if not nonempty:
        return _as_vocab([]), [np.arange(0) for _ in vocabs]
    if len(nonempty) == 1 or all(v is vocabs[nonempty[0]] for v in (vocabs[k] for k in nonempty)):
        only = vocabs[nonempty[0]]
        return only, [np.arange(v.size) for v in vocabs]

    # fast path: blocks are disjoint and sort as whole blocks
    order = sorted(nonempty, key=lambda k: vocabs[k][0])
    cat = np.concatenate([vocabs[k] for k in order])
    if _is_strictly_sorted(cat):
        remaps = [np.arange(0) for _ in vocabs]
        offset = 0
        for k in order:
            remaps[k] = offset + np.arange(vocabs[k].size)
            offset += vocabs[k].size
        return cat, remaps

    if len(nonempty) <= 4:
        merged = vocabs[nonempty[0]]
        remaps = [np.arange(0) for _ in vocabs]
        remaps[nonempty[0]] = np.arange(merged.size)
        for k in nonempty[1:]:
            merged, remap_prev, remap_new = _merge_pair(merged, vocabs[k])
            for done in nonempty:
                if done == k:
                    break
                remaps[done] = remap_prev[remaps[done]]
            remaps[k] = remap_new
        return merged, remaps

    merged, inverse = np.unique(np.concatenate(vocabs), return_inverse=True)
    remaps, start = [], 0
    for v in vocabs:
        remaps.append(inverse[start:start + v.size])
        start += v.size
    return merged, remaps


def remap_codes(codes: np.ndarray, remap: np.ndarray) -> np.ndarray:
    out = np.full(codes.shape, NO_CODE, dtype=np.int64)
    ok = codes >= 0
    out[ok] = remap[codes[ok]]
    return out


def lookup_codes(vocab: np.ndarray, keys: Iterable[str]) -> np.ndarray:
    """Codes of ``keys`` in a sorted vocabulary; unknown keys map to -1."""
    keys = _as_vocab(list(keys))
    if keys.size == 0 or vocab.size == 0:
        return np.full(keys.size, NO_CODE, dtype=np.int64)
    pos = np.searchsorted(vocab, keys)
    clipped = np.minimum(pos, vocab.size - 1)
    return np.where(vocab[clipped] == keys, clipped, NO_CODE).astype(np.int64)


# -- the stream ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-ordered, duplicate-free collection of events.

    Build one with :meth:`from_events`, or through ``ingest.load_stream`` or the
    generators in ``synth``. Iterating yields ``PostEvent`` records.
    """
    timestamp: np.ndarray
    is_retweet: np.ndarray
    event_code: np.ndarray
    author_code: np.ndarray
    root_post_code: np.ndarray
    root_author_code: np.ndarray
    topic_ptr: np.ndarray
    topic_code: np.ndarray
    post_ids: np.ndarray
    user_ids: np.ndarray
    topic_vocab: np.ndarray
    comments: np.ndarray | None = None
    source: str | None = None
    duplicates_dropped: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # construction

    @classmethod
    def from_columns(cls, *, timestamp, is_retweet, event_code, author_code,
                     root_post_code, root_author_code, topic_ptr, topic_code,
                     post_ids, user_ids, topic_vocab, comments=None,
                     source=None, duplicates_dropped=0, presorted=False) -> "EventStream":
        timestamp = np.asarray(timestamp, dtype=np.int64)
        event_code = np.asarray(event_code, dtype=np.int64)
        n = timestamp.size
        if np.unique(event_code).size != n:
            raise DuplicateEventId("duplicate event_id in stream")
        cols = dict(
            timestamp=timestamp,
            is_retweet=np.asarray(is_retweet, dtype=bool),
            event_code=event_code,
            author_code=np.asarray(author_code, dtype=np.int64),
            root_post_code=np.asarray(root_post_code, dtype=np.int64),
            root_author_code=np.asarray(root_author_code, dtype=np.int64),
            topic_ptr=np.asarray(topic_ptr, dtype=np.int64),
            topic_code=np.asarray(topic_code, dtype=np.int64),
            comments=None if comments is None else np.asarray(comments, dtype=object),
        )
        if not presorted:
            order = np.lexsort((event_code, timestamp))
            if not np.array_equal(order, np.arange(n)):
                cols = _take(cols, order)
        return cls(post_ids=_as_vocab(post_ids), user_ids=_as_vocab(user_ids),
                   topic_vocab=_as_vocab(topic_vocab), source=source,
                   duplicates_dropped=duplicates_dropped, **cols)

    @classmethod
    def from_events(cls, events: Iterable[PostEvent], source: str | None = None,
                    dedupe: bool = False) -> "EventStream":
        """Build a sorted stream from records.

        With ``dedupe`` the first occurrence of an event_id wins and later ones
        are counted in ``metadata.duplicates_dropped``; otherwise duplicates raise.
        """
        kept, seen, dropped = [], set(), 0
        for ev in events:
            if ev.event_id in seen:
                if not dedupe:
                    raise DuplicateEventId(f"duplicate event_id {ev.event_id!r}")
                dropped += 1
                continue
            seen.add(ev.event_id)
            kept.append(ev)

        post_ids = _as_vocab(sorted(seen | {e.root_post_id for e in kept if e.root_post_id is not None}))
        user_ids = _as_vocab(sorted({e.author_id for e in kept}
                                    | {e.root_author_id for e in kept if e.root_author_id is not None}))
        topic_vocab = _as_vocab(sorted({k for e in kept for k in e.topic_keys}))
        post_ix = {p: i for i, p in enumerate(post_ids.tolist())}
        user_ix = {u: i for i, u in enumerate(user_ids.tolist())}
        topic_ix = {t: i for i, t in enumerate(topic_vocab.tolist())}

        ptr = [0]
        tcodes = []
        for e in kept:
            tcodes.extend(sorted(topic_ix[k] for k in e.topic_keys))
            ptr.append(len(tcodes))
        comments = None
        if any(e.comment_text is not None for e in kept):
            comments = np.array([e.comment_text for e in kept], dtype=object)

        return cls.from_columns(
            timestamp=[e.timestamp for e in kept],
            is_retweet=[e.kind is Kind.RETWEET for e in kept],
            event_code=[post_ix[e.event_id] for e in kept],
            author_code=[user_ix[e.author_id] for e in kept],
            root_post_code=[post_ix[e.root_post_id] if e.root_post_id is not None else NO_CODE for e in kept],
            root_author_code=[user_ix[e.root_author_id] if e.root_author_id is not None else NO_CODE for e in kept],
            topic_ptr=ptr,
            topic_code=tcodes,
            post_ids=post_ids,
            user_ids=user_ids,
            topic_vocab=topic_vocab,
            comments=comments,
            source=source,
            duplicates_dropped=dropped,
        )

    @classmethod
    def concat(cls, streams: Sequence["EventStream"], source: str | None = None) -> "EventStream":
        """Merge streams into one sorted stream. Event ids must not collide."""
        streams = list(streams)
        if len(streams) == 1:
            return streams[0]
        post_ids, post_maps = merge_vocabs([s.post_ids for s in streams])
        user_ids, user_maps = merge_vocabs([s.user_ids for s in streams])
        topic_vocab, topic_maps = merge_vocabs([s.topic_vocab for s in streams])

        ptrs, offset = [np.zeros(1, dtype=np.int64)], 0
        for s in streams:
            ptrs.append(s.topic_ptr[1:] + offset)
            offset += s.topic_ptr[-1]
        comments = None
        if any(s.comments is not None for s in streams):
            comments = np.concatenate([
                s.comments if s.comments is not None else np.full(len(s), None, dtype=object)
                for s in streams])
        return cls.from_columns(
            timestamp=np.concatenate([s.timestamp for s in streams]),
            is_retweet=np.concatenate([s.is_retweet for s in streams]),
            event_code=np.concatenate([remap_codes(s.event_code, m) for s, m in zip(streams, post_maps)]),
            author_code=np.concatenate([remap_codes(s.author_code, m) for s, m in zip(streams, user_maps)]),
            root_post_code=np.concatenate([remap_codes(s.root_post_code, m) for s, m in zip(streams, post_maps)]),
            root_author_code=np.concatenate([remap_codes(s.root_author_code, m) for s, m in zip(streams, user_maps)]),
            topic_ptr=np.concatenate(ptrs),
            topic_code=np.concatenate([remap_codes(s.topic_code, m) for s, m in zip(streams, topic_maps)]),
            post_ids=post_ids, user_ids=user_ids, topic_vocab=topic_vocab,
            comments=comments, source=source,
            duplicates_dropped=sum(s.duplicates_dropped for s in streams),
        )

    def select(self, mask) -> "EventStream":
        """Sub-stream of the events where ``mask`` is true (vocabularies kept)."""
        mask = np.asarray(mask, dtype=bool)
        idx = np.flatnonzero(mask)
        cols = _take(self._columns(), idx)
        return EventStream(post_ids=self.post_ids, user_ids=self.user_ids,
                           topic_vocab=self.topic_vocab, source=self.source,
                           duplicates_dropped=self.duplicates_dropped, **cols)

    def _columns(self) -> dict:
        return dict(timestamp=self.timestamp, is_retweet=self.is_retweet,
                    event_code=self.event_code, author_code=self.author_code,
                    root_post_code=self.root_post_code, root_author_code=self.root_author_code,
                    topic_ptr=self.topic_ptr, topic_code=self.topic_code, comments=self.comments)

    # sequence protocol

    def __len__(self) -> int:
        return int(self.timestamp.size)

    def __iter__(self) -> Iterator[PostEvent]:
        return iter(self.events)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return self.events[i]
        return self.event_at(int(i))

    def event_at(self, i: int) -> PostEvent:
        if i < 0:
            i += len(self)
        lo, hi = self.topic_ptr[i], self.topic_ptr[i + 1]
        rp, ra = self.root_post_code[i], self.root_author_code[i]
        return PostEvent(
            event_id=str(self.post_ids[self.event_code[i]]),
            timestamp=int(self.timestamp[i]),
            author_id=str(self.user_ids[self.author_code[i]]),
            kind=Kind.RETWEET if self.is_retweet[i] else Kind.ORIGINAL,
            root_post_id=str(self.post_ids[rp]) if rp >= 0 else None,
            root_author_id=str(self.user_ids[ra]) if ra >= 0 else None,
            topic_keys=frozenset(self.topic_vocab[self.topic_code[lo:hi]].tolist()),
            comment_text=None if self.comments is None else self.comments[i],
        )

    @property
    def events(self) -> tuple[PostEvent, ...]:
        if "events" not in self._cache:
            self._cache["events"] = tuple(self.event_at(i) for i in range(len(self)))
        return self._cache["events"]

    # summaries

    @property
    def metadata(self) -> StreamMetadata:
        n = len(self)
        span = (int(self.timestamp[0]), int(self.timestamp[-1])) if n else None
        return StreamMetadata(self.source, n, int(self.is_retweet.sum()), span,
                              self.duplicates_dropped)

    @property
    def event_ids(self) -> np.ndarray:
        return self.post_ids[self.event_code]

    def author_ids(self) -> np.ndarray:
        """Distinct author ids present in the stream, sorted."""
        return self.user_ids[np.unique(self.author_code)]

    def topic_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """(event index, topic code) for every topic an event carries."""
        if "pairs" not in self._cache:
            counts = np.diff(self.topic_ptr)
            ev = np.repeat(np.arange(len(self)), counts)
            self._cache["pairs"] = (ev, self.topic_code)
        return self._cache["pairs"]

    def topics(self) -> list[str]:
        """Topic keys carried by at least one event, sorted."""
        return self.topic_vocab[np.unique(self.topic_code)].tolist()

    def user_codes(self, user_ids: Iterable[str]) -> np.ndarray:
        return lookup_codes(self.user_ids, user_ids)

    def topic_codes(self, keys: Iterable[str]) -> np.ndarray:
        return lookup_codes(self.topic_vocab, keys)

    def to_records(self) -> Iterator[dict]:
        for i in range(len(self)):
            yield self.event_at(i).to_record()


def _take(cols: dict, idx: np.ndarray) -> dict:
    ptr = cols["topic_ptr"]
    counts = np.diff(ptr)[idx]
    starts = ptr[:-1][idx]
    new_ptr = np.zeros(idx.size + 1, dtype=np.int64)
    np.cumsum(counts, out=new_ptr[1:])
    # gather ragged topic slices
    if new_ptr[-1]:
        within = np.arange(new_ptr[-1]) - np.repeat(new_ptr[:-1], counts)
        tcodes = cols["topic_code"][np.repeat(starts, counts) + within]
    else:
        tcodes = np.zeros(0, dtype=np.int64)
    out = {k: (v[idx] if v is not None else None) for k, v in cols.items()
           if k not in ("topic_ptr", "topic_code")}
    out["topic_ptr"] = new_ptr
    out["topic_code"] = tcodes
    return out
