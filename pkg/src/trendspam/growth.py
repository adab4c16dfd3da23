"""Per-topic cumulative counts and the cross-topic distribution of their ratios.

For a topic q observed in intervals t_1, t_2, ... of fixed width starting at
its trend start, ``N_q(t_i)`` is the number of events up to and including
interval i, and ``C_q(t_i, t_j) = N_q(t_i) / N_q(t_j)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptySample, IndexOutOfRange, InvalidWidth, ZeroDenominator
from .events import EventStream

INTERVAL = 600


class Subset(str, Enum):
    ALL = "all"
    ORIGINAL = "original"
    RETWEET = "retweet"


def _subset_mask(stream: EventStream, subset: Subset) -> np.ndarray | None:
    subset = Subset(subset)
    if subset is Subset.ALL:
        return None
    return stream.is_retweet if subset is Subset.RETWEET else ~stream.is_retweet


def _check_width(width):
    if isinstance(width, bool) or not isinstance(width, (int, np.integer)) or width <= 0:
        raise InvalidWidth(f"interval width must be a positive integer, got {width!r}")


@dataclass(frozen=True, eq=False)
class CumulativeSeries:
    topic_key: str
    t0: int
    interval_width: int
    interval_counts: np.ndarray
    cumulative: np.ndarray
    subset: Subset

    def __len__(self):
        return int(self.interval_counts.size)


def cumulative_series(stream: EventStream, topic: str, t0: int, width: int = INTERVAL,
                      subset: Subset = Subset.ALL, n_intervals: int | None = None) -> CumulativeSeries:
    """Interval counts and their running sum for one topic from ``t0`` on.

    By default the intervals run up to the interval holding the topic's last
    event (any kind, so series of different subsets line up). ``n_intervals``
    fixes the length instead, truncating or padding with zero counts.
    Events before ``t0`` are ignored.
    """
    _check_width(width)
    code = stream.topic_codes([topic])[0]
    ev, tc = stream.topic_pairs()
    ev = ev[tc == code] if code >= 0 else ev[:0]
    ts = stream.timestamp[ev]
    after = ts >= t0
    ev, ts = ev[after], ts[after]
    if n_intervals is None:
        n_intervals = int((ts.max() - t0) // width) + 1 if ts.size else 1
    idx = (ts - t0) // width
    mask = _subset_mask(stream, subset)
    keep = idx < n_intervals
    if mask is not None:
        keep &= mask[ev]
    counts = np.bincount(idx[keep], minlength=n_intervals)[:n_intervals].astype(np.int64)
    return CumulativeSeries(topic, int(t0), int(width), counts, np.cumsum(counts), Subset(subset))


def ratio(series: CumulativeSeries, i: int, j: int) -> float:
    """``N(t_i) / N(t_j)`` with 1-based interval indices, ``i > j >= 1``."""
    if not (i > j >= 1) or i > len(series):
        raise IndexOutOfRange(f"need len(series) >= i > j >= 1, got i={i}, j={j}, len={len(series)}")
    denom = series.cumulative[j - 1]
    if denom == 0:
        raise ZeroDenominator(f"{series.topic_key}: N(t_{j}) = 0")
    return float(series.cumulative[i - 1] / denom)


@dataclass(frozen=True, eq=False)
class RatioSample:
    frame_pair: tuple[int, int]
    topics: tuple[str, ...]
    values: np.ndarray
    subset: Subset
    skipped: tuple[str, ...] = ()

    def __len__(self):
        return int(self.values.size)


def _cumulative_matrix(stream, topic_list, starts, width, subset, n_intervals):
    """Rows of N_q(t_1..t_n) for each topic, computed in one pass."""
    row_of = np.full(stream.topic_vocab.size, -1, dtype=np.int64)
    codes = stream.topic_codes(topic_list)
    known = codes >= 0
    row_of[codes[known]] = np.flatnonzero(known)
    ev, tc = stream.topic_pairs()
    row = row_of[tc]
    keep = row >= 0
    mask = _subset_mask(stream, subset)
    if mask is not None:
        keep &= mask[ev]
    ev, row = ev[keep], row[keep]
    idx = (stream.timestamp[ev] - starts[row]) // width
    ok = (idx >= 0) & (idx < n_intervals)
    flat = row[ok] * n_intervals + idx[ok]
    counts = np.bincount(flat, minlength=len(topic_list) * n_intervals)
    return np.cumsum(counts.reshape(len(topic_list), n_intervals), axis=1)


def ratio_distribution(stream: EventStream, frame_pair: tuple[int, int],
                       t0s: Mapping[str, int] | None = None,
                       topics: Iterable[str] | None = None,
                       width: int = INTERVAL, subset: Subset = Subset.ALL) -> RatioSample:
    """``C_q(t_i, t_j)`` over topics for one frame pair.

    ``t0s`` maps topic to trend start; when omitted the starts come from the
    stream's own hourly top-50 lists. ``topics`` defaults to every topic with a
    start. Topics with ``N(t_j) = 0`` are left out and listed in ``skipped``.
    A topic with no events after interval T has ``N(t_i) = N(t_T)`` for
    ``i > T``.
    """
    _check_width(width)
    i, j = frame_pair
    if not (i > j >= 1):
        raise IndexOutOfRange(f"frame pair needs i > j >= 1, got {frame_pair}")
    if t0s is None:
        from .trending import build_episodes, compute_snapshots, trend_starts
        t0s = trend_starts(build_episodes(compute_snapshots(stream, k=50)))
    topic_list = sorted(t0s) if topics is None else sorted(set(topics))
    if not topic_list:
        raise EmptySample("no topics to sample")
    starts = np.array([t0s[t] for t in topic_list], dtype=np.int64)
    cum = _cumulative_matrix(stream, topic_list, starts, width, subset, i)
    num, den = cum[:, i - 1], cum[:, j - 1]
    ok = den > 0
    if not ok.any():
        raise EmptySample(f"no topic has N(t_{j}) > 0")
    names = np.asarray(topic_list, dtype=object)
    return RatioSample(
        frame_pair=(i, j),
        topics=tuple(names[ok].tolist()),
        values=num[ok] / den[ok],
        subset=Subset(subset),
        skipped=tuple(names[~ok].tolist()),
    )


def write_ratio_csv(samples: Sequence[RatioSample], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["topic", "i", "j", "ratio", "subset"])
        for s in samples:
            i, j = s.frame_pair
            for topic, value in zip(s.topics, s.values.tolist()):
                w.writerow([topic, i, j, repr(value), s.subset.value])
