"""
Spam-account detection from retweet behaviour.

The central signal is the user-retweet ratio: how many retweets a user made
divided by how many distinct authors those retweets pointed at. Accounts set
up to pump one author's posts sit far above organic users on this ratio.
"""
from __future__ import annotations

import csv
from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EmptySuspects, TooFewEvents
from .events import EventStream, normalize_topic


@dataclass(frozen=True)
class RetweetProfile:
    user_id: str
    retweet_count: int
    distinct_targets: int

    @property
    def ratio(self) -> float:
        return self.retweet_count / self.distinct_targets


class ProfileTable(Mapping):
    """Read-only mapping ``user_id -> RetweetProfile`` backed by arrays."""

    def __init__(self, user_ids: np.ndarray, retweets: np.ndarray, targets: np.ndarray):
        self.user_ids = user_ids
        self.retweets = retweets
        self.targets = targets
        self._index = None

    @property
    def ratios(self) -> np.ndarray:
        return self.retweets / self.targets

    def _lookup(self):
        if self._index is None:
            self._index = {u: i for i, u in enumerate(self.user_ids.tolist())}
        return self._index

    def __getitem__(self, user_id: str) -> RetweetProfile:
        i = self._lookup()[user_id]
        return RetweetProfile(user_id, int(self.retweets[i]), int(self.targets[i]))

    def __iter__(self) -> Iterator[str]:
        return iter(self.user_ids.tolist())

    def __len__(self) -> int:
        return int(self.user_ids.size)


def user_retweet_profiles(stream: EventStream) -> ProfileTable:
    """Retweet count R, distinct retweeted authors U and R/U for every retweeter."""
    rt = stream.is_retweet
    author = stream.author_code[rt]
    target = stream.root_author_code[rt]
    n_users = stream.user_ids.size
    retweets = np.bincount(author, minlength=n_users)
    pairs = np.unique(author * n_users + target)
    targets = np.bincount(pairs // n_users, minlength=n_users)
    who = np.flatnonzero(retweets)
    return ProfileTable(stream.user_ids[who], retweets[who].astype(np.int64), targets[who].astype(np.int64))


def _profile_arrays(profiles: Mapping[str, RetweetProfile]):
    if isinstance(profiles, ProfileTable):
        return profiles.user_ids, profiles.ratios
    ids = list(profiles)
    return np.asarray(ids, dtype=str), np.array([profiles[u].ratio for u in ids], dtype=float)


# -- account status ------------------------------------------------------------

class AccountStatus(str, Enum):
    ACTIVE = "active"
    DELETED = "deleted"
    UNKNOWN = "unknown"


def load_statuses(path) -> dict[str, AccountStatus]:
    """Read a ``user_id,status`` CSV (header optional)."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            uid, status = row[0].strip(), row[1].strip().lower() if len(row) > 1 else ""
            if uid == "user_id" and status == "status":
                continue
            try:
                out[uid] = AccountStatus(status)
            except ValueError:
                out[uid] = AccountStatus.UNKNOWN
    return out


def load_allowlist(path) -> frozenset[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return frozenset(s.strip() for s in lines if s.strip() and not s.lstrip().startswith("#"))


# -- flagging ------------------------------------------------------------------

class Reason(str, Enum):
    HIGH_RATIO = "high_ratio"
    DELETED_ACCOUNT = "deleted_account"
    GROUND_TRUTH = "ground_truth"


@dataclass(frozen=True)
class SpamPolicy:
    ratio_threshold: float = 5.0
    use_status: bool = False
    allowlist: frozenset[str] = frozenset()

    def describe(self) -> str:
        parts = [f"user-retweet ratio >= {self.ratio_threshold:g}"]
        if self.use_status:
            parts.append("account deleted")
        text = " or ".join(parts)
        if self.allowlist:
            text += f", excluding {len(self.allowlist)} allowlisted accounts"
        return text


@dataclass(frozen=True)
class SuspectSet:
    reasons: Mapping[str, frozenset[Reason]]
    policy: str = ""

    @property
    def members(self) -> frozenset[str]:
        return frozenset(self.reasons)

    def __len__(self):
        return len(self.reasons)

    def __contains__(self, user_id):
        return user_id in self.reasons

    def __iter__(self):
        return iter(sorted(self.reasons))

    @classmethod
    def from_ids(cls, user_ids: Iterable[str], reason: Reason = Reason.GROUND_TRUTH,
                 policy: str = "") -> "SuspectSet":
        return cls({u: frozenset({reason}) for u in user_ids}, policy or reason.value)

    def to_rows(self):
        return [(u, "|".join(sorted(r.value for r in self.reasons[u]))) for u in sorted(self.reasons)]


def flag_suspects(profiles: Mapping[str, RetweetProfile],
                  statuses: Mapping[str, AccountStatus] | None = None,
                  policy: SpamPolicy = SpamPolicy()) -> SuspectSet:
    """Flag users by ratio threshold and, optionally, deleted status."""
    if policy.ratio_threshold < 1:
        raise ValueError(f"ratio_threshold must be >= 1, got {policy.ratio_threshold}")
    ids, ratios = _profile_arrays(profiles)
    reasons: dict[str, set[Reason]] = {}
    for uid in ids[ratios >= policy.ratio_threshold].tolist():
        reasons[uid] = {Reason.HIGH_RATIO}
    if policy.use_status and statuses:
        for uid, status in statuses.items():
            if status is AccountStatus.DELETED:
                reasons.setdefault(uid, set()).add(Reason.DELETED_ACCOUNT)
    for uid in policy.allowlist:
        reasons.pop(uid, None)
    return SuspectSet({u: frozenset(r) for u, r in reasons.items()}, policy.describe())


@dataclass(frozen=True)
class RatioBand:
    """Half-open ratio range ``[lo, hi)``; ``hi=None`` is unbounded."""
    lo: float
    hi: float | None
    label: str

    def contains(self, r: np.ndarray) -> np.ndarray:
        upper = np.inf if self.hi is None else self.hi
        return (r >= self.lo) & (r < upper)


def _integer_bands() -> tuple[RatioBand, ...]:
    bands = [RatioBand(30, None, ">=30"), RatioBand(20, 30, "20-29"), RatioBand(11, 20, "11-19")]
    bands += [RatioBand(v, v + 1, str(v)) for v in range(10, 0, -1)]
    return tuple(bands)


# the banding used when checking how many accounts are still reachable
STATUS_BANDS = _integer_bands()


@dataclass(frozen=True)
class BandRow:
    band: str
    n_users: int
    active_pct: float | None
    inactive_pct: float | None


def active_fraction_by_ratio(profiles: Mapping[str, RetweetProfile],
                             statuses: Mapping[str, AccountStatus],
                             bands: Sequence[RatioBand] = STATUS_BANDS) -> list[BandRow]:
    """Percent of users per ratio band whose status is Active; the rest count as inactive.

    Users missing from ``statuses`` count as Unknown, hence inactive. Empty bands
    yield ``None`` percentages.
    """
    ids, ratios = _profile_arrays(profiles)
    masks = [b.contains(ratios) for b in bands]
    if masks:
        hits = np.sum(masks, axis=0)
        if np.any(hits > 1):
            raise ValueError("ratio bands overlap")
        if np.any(hits == 0):
            raise ValueError("ratio bands do not cover every observed ratio")
    active = np.array([statuses.get(u) is AccountStatus.ACTIVE for u in ids.tolist()], dtype=bool)
    rows = []
    for band, m in zip(bands, masks):
        n = int(m.sum())
        if n == 0:
            rows.append(BandRow(band.label, 0, None, None))
            continue
        a = int(active[m].sum())
        rows.append(BandRow(band.label, n, 100 * a / n, 100 * (n - a) / n))
    return rows


# -- removal and impact -------------------------------------------------------

@dataclass(frozen=True)
class RemovalReport:
    total_events: int
    total_retweets: int
    removed_retweets: int
    removed_originals: int
    removed_fraction_of_retweets: float
    removed_fraction_of_all_tweets: float
    suspects_fraction_of_users: float
    suspects_fraction_of_retweeters: float
    remaining_events: int
    remaining_retweets: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _suspect_codes(stream: EventStream, suspects) -> np.ndarray:
    members = suspects.members if isinstance(suspects, SuspectSet) else frozenset(suspects)
    codes = stream.user_codes(sorted(members))
    return codes[codes >= 0]


def _frac(a, b) -> float:
    return a / b if b else 0.0


def remove_spam(stream: EventStream, suspects: SuspectSet) -> tuple[EventStream, RemovalReport]:
    """Drop every event a suspect authored and every retweet of a suspect's post."""
    if not len(suspects):
        raise EmptySuspects("no suspects to remove")
    codes = _suspect_codes(stream, suspects)
    by_suspect = np.isin(stream.author_code, codes)
    of_suspect = np.isin(stream.root_author_code, codes)
    removed = by_suspect | of_suspect
    rt = stream.is_retweet

    n, n_rt = len(stream), int(rt.sum())
    removed_rt = int((removed & rt).sum())
    removed_orig = int((removed & ~rt).sum())
    authors = np.unique(stream.author_code)
    retweeters = np.unique(stream.author_code[rt])
    report = RemovalReport(
        total_events=n,
        total_retweets=n_rt,
        removed_retweets=removed_rt,
        removed_originals=removed_orig,
        removed_fraction_of_retweets=_frac(removed_rt, n_rt),
        removed_fraction_of_all_tweets=_frac(removed_rt + removed_orig, n),
        suspects_fraction_of_users=_frac(int(np.isin(authors, codes).sum()), authors.size),
        suspects_fraction_of_retweeters=_frac(int(np.isin(retweeters, codes).sum()), retweeters.size),
        remaining_events=n - removed_rt - removed_orig,
        remaining_retweets=n_rt - removed_rt,
    )
    return stream.select(~removed), report


@dataclass(frozen=True)
class ImpactReport:
    fraction_retweeted_authors_touched: float
    fraction_trending_keywords_touched: float
    retweeted_authors: int
    touched_authors: int
    trending_keywords: int
    touched_keywords: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def trendsetter_impact(stream: EventStream, suspects, trending_keywords: Iterable[str]) -> ImpactReport:
    """How far suspect retweets reach: retweeted authors and trending keywords touched."""
    codes = _suspect_codes(stream, suspects)
    rt = stream.is_retweet
    by_suspect = rt & np.isin(stream.author_code, codes)
    retweeted = np.unique(stream.root_author_code[rt])
    touched = np.unique(stream.root_author_code[by_suspect])

    keywords = sorted({normalize_topic(k) for k in trending_keywords})
    ev, tc = stream.topic_pairs()
    touched_topics = np.unique(tc[by_suspect[ev]])
    kw_codes = stream.topic_codes(keywords)
    n_touched_kw = int(np.isin(kw_codes[kw_codes >= 0], touched_topics).sum())
    return ImpactReport(
        fraction_retweeted_authors_touched=_frac(touched.size, retweeted.size),
        fraction_trending_keywords_touched=_frac(n_touched_kw, len(keywords)),
        retweeted_authors=int(retweeted.size),
        touched_authors=int(touched.size),
        trending_keywords=len(keywords),
        touched_keywords=n_touched_kw,
    )


# -- trend-setters -------------------------------------------------------------

@dataclass(frozen=True)
class TrendsetterRow:
    author_id: str
    times_retweeted: int
    distinct_tweets_retweeted: int
    topics_appeared_in: int

    @property
    def score(self) -> float:
        return self.times_retweeted / self.topics_appeared_in


def trendsetter_table(stream: EventStream, trending_topics: Iterable[str] | None = None) -> list[TrendsetterRow]:
    """Per retweeted author: retweets received, distinct posts retweeted, trending topics reached."""
    rt = stream.is_retweet
    n_users = stream.user_ids.size
    root_author = stream.root_author_code
    times = np.bincount(root_author[rt], minlength=n_users)
    posts = np.unique(root_author[rt] * (stream.post_ids.size + 1) + stream.root_post_code[rt])
    distinct = np.bincount(posts // (stream.post_ids.size + 1), minlength=n_users)

    ev, tc = stream.topic_pairs()
    sel = rt[ev]
    if trending_topics is not None:
        allowed = stream.topic_codes(trending_topics)
        sel &= np.isin(tc, allowed[allowed >= 0])
    n_topics = stream.topic_vocab.size
    at = np.unique(root_author[ev[sel]] * n_topics + tc[sel])
    topics = np.bincount(at // n_topics, minlength=n_users)

    rows = []
    for u in np.flatnonzero(times).tolist():
        rows.append(TrendsetterRow(str(stream.user_ids[u]), int(times[u]), int(distinct[u]), int(topics[u])))
    return rows


def rank_rows(rows: Iterable[TrendsetterRow], min_topics: int = 10) -> list[TrendsetterRow]:
    kept = [r for r in rows if r.topics_appeared_in >= max(min_topics, 1)]
    return sorted(kept, key=lambda r: (-r.score, r.author_id))


def rank_trendsetters(stream: EventStream, episodes=None, min_topics: int = 10) -> list[TrendsetterRow]:
    """Authors ranked by retweets received per trending topic reached.

    Authors reaching fewer than ``min_topics`` topics are dropped. With
    ``episodes`` only topics that made the trending list count.
    """
    topics = None if episodes is None else [e.topic_key for e in episodes]
    return rank_rows(trendsetter_table(stream, topics), min_topics)


# -- timing --------------------------------------------------------------------

@dataclass(frozen=True)
class BurstFeatures:
    median_intra_burst_gap: float | None
    burst_count: int
    max_repeats: int


def burst_features(stream: EventStream, user_id: str, burst_gap: int = 60) -> BurstFeatures:
    """Split a user's retweets into bursts of events at most ``burst_gap`` s apart."""
    code = stream.user_codes([user_id])[0]
    mine = stream.is_retweet & (stream.author_code == code) if code >= 0 else np.zeros(len(stream), bool)
    ts = stream.timestamp[mine]
    if ts.size < 2:
        raise TooFewEvents(f"{user_id}: need at least 2 retweets, got {ts.size}")
    gaps = np.diff(ts)
    inside = gaps <= burst_gap
    median = float(np.median(gaps[inside])) if inside.any() else None
    repeats = int(np.bincount(stream.root_post_code[mine]).max())
    return BurstFeatures(median, 1 + int((~inside).sum()), repeats)
