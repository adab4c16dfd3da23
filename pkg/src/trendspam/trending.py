"""Hourly top-K trending lists and the lifecycle of topics on them."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonContiguousSnapshots, OddK
from .events import EventStream

HOUR = 3600


@dataclass(frozen=True)
class TrendingSnapshot:
    hour_start: int
    ranked: tuple[tuple[str, int], ...]

    @property
    def topics(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.ranked)


@dataclass(frozen=True)
class TrendEpisode:
    topic_key: str
    hours_on_list: int
    reappearances: int
    hourly_ranks: tuple[tuple[int, int], ...]

    @property
    def first_hour(self) -> int:
        return self.hourly_ranks[0][0]

    @property
    def last_hour(self) -> int:
        return self.hourly_ranks[-1][0]


def compute_snapshots(stream: EventStream, k: int = 50, width: int = HOUR) -> list[TrendingSnapshot]:
    """Top-``k`` topics by raw event count for every hour of the stream.

    Originals and retweets both count. Ties go to the lexicographically smaller
    key. Hours with no topical events give an empty snapshot, so the result is
    hour-contiguous from the first to the last event.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(stream) == 0:
        return []
    first = int(stream.timestamp[0]) // width
    n_hours = int(stream.timestamp[-1]) // width - first + 1

    ev, tc = stream.topic_pairs()
    hour = stream.timestamp[ev] // width - first
    n_topics = stream.topic_vocab.size
    key = hour * n_topics + tc
    uniq, counts = np.unique(key, return_counts=True)
    h, t = np.divmod(uniq, n_topics)
    # topic codes follow lexicographic order, so the code is the tie-break
    order = np.lexsort((t, -counts, h))
    h, t, counts = h[order], t[order], counts[order]
    group_start = np.searchsorted(h, np.arange(n_hours))
    rank = np.arange(h.size) - group_start[h]
    keep = rank < k
    h, t, counts = h[keep], t[keep], counts[keep]
    bounds = np.searchsorted(h, np.arange(n_hours + 1))

    names = stream.topic_vocab
    snaps = []
    for i in range(n_hours):
        lo, hi = bounds[i], bounds[i + 1]
        ranked = tuple(zip(names[t[lo:hi]].tolist(), counts[lo:hi].tolist()))
        snaps.append(TrendingSnapshot((first + i) * width, ranked))
    return snaps


def build_episodes(snapshots: Sequence[TrendingSnapshot], width: int = HOUR) -> list[TrendEpisode]:
    """One episode per topic that ever reaches the list, ordered by first appearance then key."""
    for a, b in zip(snapshots, snapshots[1:]):
        if b.hour_start - a.hour_start != width:
            raise NonContiguousSnapshots(
                f"gap between snapshots at {a.hour_start} and {b.hour_start}")
    ranks: dict[str, list[tuple[int, int]]] = defaultdict(list)
    index_of: dict[str, list[int]] = defaultdict(list)
    for i, snap in enumerate(snapshots):
        for r, (topic, _) in enumerate(snap.ranked, start=1):
            ranks[topic].append((snap.hour_start, r))
            index_of[topic].append(i)

    episodes = []
    for topic, hr in ranks.items():
        idx = np.asarray(index_of[topic])
        gaps = int(np.count_nonzero(np.diff(idx) > 1))
        episodes.append(TrendEpisode(topic, len(hr), gaps, tuple(hr)))
    episodes.sort(key=lambda e: (e.first_hour, e.topic_key))
    return episodes


def trend_starts(episodes: Sequence[TrendEpisode]) -> dict[str, int]:
    """First trending hour of each topic, the anchor for its cumulative series."""
    return {e.topic_key: e.first_hour for e in episodes}


def band_persistence(episodes: Sequence[TrendEpisode], k: int) -> list[tuple[int, float]]:
    """Mean fraction of on-list hours spent in the bottom half, per duration.

    The bands are ranks ``1..k/2`` and ``k/2+1..k``. Returns ``(duration_hours,
    fraction)`` rows sorted by duration.
    """
    if k % 2:
        raise OddK(f"k must be even to split into two bands, got {k}")
    half = k // 2
    by_duration: dict[int, list[float]] = defaultdict(list)
    for e in episodes:
        bottom = sum(1 for _, r in e.hourly_ranks if r > half)
        by_duration[e.hours_on_list].append(bottom / e.hours_on_list)
    return [(d, float(np.mean(v))) for d, v in sorted(by_duration.items())]


def write_snapshots_csv(snapshots: Sequence[TrendingSnapshot], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour_start", "rank", "topic", "count"])
        for s in snapshots:
            for r, (topic, count) in enumerate(s.ranked, start=1):
                w.writerow([s.hour_start, r, topic, count])


def write_episodes_csv(episodes: Sequence[TrendEpisode], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["topic", "hours_on_list", "reappearances"])
        for e in episodes:
            w.writerow([e.topic_key, e.hours_on_list, e.reappearances])
