"""Stream builders and brute-force oracles shared by the tests."""
from __future__ import annotations

from collections import Counter, defaultdict

import numpy as np

from trendspam.events import EventStream, Kind, PostEvent


def ev(event_id, ts, author, topics=(), root=None, root_author=None, comment=None) -> PostEvent:
    kind = Kind.RETWEET if root is not None else Kind.ORIGINAL
    return PostEvent(event_id, ts, author, kind, root, root_author, frozenset(topics), comment)


def stream_of(*events, source="test") -> EventStream:
    return EventStream.from_events(events, source=source)


def random_events(rng: np.random.Generator, n: int, n_users: int = 20, n_topics: int = 8,
                  span: int = 4 * 3600, rt_share: float = 0.6) -> list[PostEvent]:
    """Random originals and retweets; every retweet points at an earlier original."""
    ts = np.sort(rng.integers(0, span, n))
    out: list[PostEvent] = []
    originals: list[PostEvent] = []
    for k in range(n):
        author = f"u{rng.integers(n_users):03d}"
        n_t = int(rng.integers(0, 3))
        topics = {f"t{x}" for x in rng.integers(0, n_topics, n_t)}
        if originals and rng.random() < rt_share:
            root = originals[int(rng.integers(len(originals)))]
            e = ev(f"e{k:05d}", int(ts[k]), author, topics, root.event_id, root.author_id)
        else:
            e = ev(f"e{k:05d}", int(ts[k]), author, topics)
            originals.append(e)
        out.append(e)
    return out


# -- oracles -----------------------------------------------------------------------

def cumulative_oracle(events, topic, t0, width, n_intervals, kind=None) -> list[int]:
    """N(t_i) by rescanning every event for every i."""
    out = []
    for i in range(1, n_intervals + 1):
        end = t0 + i * width
        out.append(sum(1 for e in events
                       if topic in e.topic_keys and t0 <= e.timestamp < end
                       and (kind is None or e.kind is kind)))
    return out


def snapshots_oracle(events, k, width=3600):
    """Per hour from first to last event: topics sorted by (-count, key), cut to k."""
    if not events:
        return []
    first = min(e.timestamp for e in events) // width
    last = max(e.timestamp for e in events) // width
    result = []
    for h in range(first, last + 1):
        counts = Counter()
        for e in events:
            if e.timestamp // width == h:
                for t in e.topic_keys:
                    counts[t] += 1
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        result.append((h * width, ranked))
    return result


def episodes_oracle(snapshot_lists):
    """topic -> (hours_on_list, reappearances) from a list of per-hour ranked lists."""
    hours = defaultdict(list)
    for idx, ranked in enumerate(snapshot_lists):
        for topic, _ in ranked:
            hours[topic].append(idx)
    out = {}
    for topic, idxs in hours.items():
        gaps = sum(1 for a, b in zip(idxs, idxs[1:]) if b - a > 1)
        out[topic] = (len(idxs), gaps)
    return out


def profiles_oracle(events):
    """user -> (retweets, distinct retweeted authors)."""
    rts = defaultdict(list)
    for e in events:
        if e.kind is Kind.RETWEET:
            rts[e.author_id].append(e.root_author_id)
    return {u: (len(v), len(set(v))) for u, v in rts.items()}
