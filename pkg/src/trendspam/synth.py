"""
Labeled synthetic corpora: organic topics plus injected retweet bots.

Organic topics grow multiplicatively with a decaying rate. With ``N(t)`` the
running total after interval t,

    n(1) = seed_count
    n(t) = round(N(t-1) * X_t * t**-theta),   ln X_t ~ Normal(g_mu, g_sigma)

so ``ln N(t_i) - ln N(t_j)`` is a sum of independent log-factors and the
cumulative ratios come out close to log-normal. Bots retweet one target's
earliest post in tight bursts.
"""
from __future__ import annotations

import csv
import json
import math
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ParamError, TargetNotFound
from .events import NO_CODE, EventStream, merge_vocabs, normalize_topic, remap_codes
from .spamdetect import SuspectSet, Reason

HOUR = 3600


# -- parameters ----------------------------------------------------------------

@dataclass(frozen=True)
class OrganicTopicParams:
    intervals: int = 12
    seed_count: int = 20
    g_mu: float = 0.05
    g_sigma: float = 0.3
    theta: float = 0.5
    retweet_share: float = 0.65
    author_pool: int = 400
    interval_width: int = 600
    # caps every organic user's retweets per topic, which bounds their ratio
    max_user_retweets: int = 4

    def __post_init__(self):
        if self.intervals < 2:
            raise ParamError("intervals must be >= 2")
        if self.seed_count < 1:
            raise ParamError("seed_count must be >= 1")
        if self.g_sigma < 0 or not math.isfinite(self.g_sigma):
            raise ParamError("g_sigma must be finite and >= 0")
        if self.theta < 0:
            raise ParamError("theta must be >= 0")
        if not 0 <= self.retweet_share <= 1:
            raise ParamError("retweet_share must lie in [0, 1]")
        if self.author_pool < 1 or self.interval_width < 1 or self.max_user_retweets < 1:
            raise ParamError("author_pool, interval_width and max_user_retweets must be positive")


@dataclass(frozen=True)
class BotScenario:
    target_author: str
    n_bots: int = 10
    bursts_per_bot: int = 4
    burst_size: int = 10
    intra_burst_gap: int = 3
    inter_burst_gap: int = 120

    def __post_init__(self):
        if self.n_bots < 0 or self.bursts_per_bot < 1:
            raise ParamError("n_bots must be >= 0 and bursts_per_bot >= 1")
        if self.burst_size < 2:
            raise ParamError("burst_size must be >= 2")
        if not 0 < self.intra_burst_gap < self.inter_burst_gap:
            raise ParamError("need 0 < intra_burst_gap < inter_burst_gap")

    @property
    def retweets_per_bot(self) -> int:
        return self.bursts_per_bot * self.burst_size


def _from_dict(cls, data: Mapping):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ParamError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**data)


# -- id formatting -------------------------------------------------------------

def _format_ids(prefixes: Sequence[str], which: np.ndarray, numbers: np.ndarray, width: int) -> np.ndarray:
    """``prefixes[which[k]]`` + ``numbers[k]`` zero-padded to ``width`` digits.

    With equal-length prefixes, rows sorted by (which, number) give sorted ids.
    """
    numbers = np.asarray(numbers, dtype=np.int64)
    which = np.asarray(which, dtype=np.int64)
    raw = [p.encode("utf-8") for p in prefixes]
    if len({len(r) for r in raw}) > 1 or not all(r.isascii() for r in raw):
        return np.array([f"{prefixes[w]}{v:0{width}d}" for w, v in zip(which.tolist(), numbers.tolist())],
                        dtype=str)
    plen = len(raw[0])
    table = np.frombuffer(b"".join(raw), dtype=np.uint8).reshape(len(raw), plen)
    buf = np.empty((numbers.size, plen + width), dtype=np.uint8)
    buf[:, :plen] = table[which]
    v = numbers.copy()
    for k in range(width - 1, -1, -1):
        buf[:, plen + k] = 48 + v % 10
        v //= 10
    return buf.view(f"S{plen + width}").ravel().astype(f"U{plen + width}")


def _seq_ids(prefix: str, numbers: np.ndarray, width: int) -> np.ndarray:
    numbers = np.asarray(numbers, dtype=np.int64)
    return _format_ids([prefix], np.zeros(numbers.size, dtype=np.int64), numbers, width)


def _width(n: int, minimum: int) -> int:
    return max(minimum, len(str(max(n - 1, 0))))


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# -- organic topics ------------------------------------------------------------

def interval_counts(params: OrganicTopicParams, rng: np.random.Generator) -> np.ndarray:
    """New events per interval under multiplicative growth with power decay."""
    T = params.intervals
    log_x = rng.normal(params.g_mu, params.g_sigma, T - 1) if params.g_sigma > 0 \
        else np.full(T - 1, params.g_mu)
    factors = np.exp(log_x) * np.arange(2, T + 1, dtype=float) ** -params.theta
    n = np.empty(T, dtype=np.int64)
    n[0] = params.seed_count
    total = n[0]
    for t in range(1, T):
        n[t] = math.floor(total * factors[t - 1] + 0.5)
        total += n[t]
    return n


@dataclass(frozen=True, eq=False)
class _TopicDraw:
    """One topic's events in generation (= time) order, with topic-local codes."""
    timestamp: np.ndarray
    is_retweet: np.ndarray
    root_event: np.ndarray
    author: np.ndarray
    users: np.ndarray  # pool numbers behind the local author codes

    def __len__(self):
        return int(self.timestamp.size)


def _draw_topic(params: OrganicTopicParams, rng: np.random.Generator, start: int) -> _TopicDraw:
    counts = interval_counts(params, rng)
    m = int(counts.sum())
    w = params.interval_width
    interval = np.repeat(np.arange(params.intervals), counts)
    ts = start + np.sort(interval * w + rng.integers(0, w, m))

    is_rt = rng.random(m) < params.retweet_share
    is_rt[0] = False
    originals = np.flatnonzero(~is_rt)
    seen_originals = np.cumsum(~is_rt)
    rt_idx = np.flatnonzero(is_rt)
    pick = np.floor(rng.random(rt_idx.size) * seen_originals[rt_idx]).astype(np.int64)
    root_event = np.full(m, NO_CODE, dtype=np.int64)
    root_event[rt_idx] = originals[pick]

    author = rng.integers(0, params.author_pool, m)
    # reassign retweets beyond each user's cap to fresh accounts
    rt_users = author[rt_idx]
    order = np.argsort(rt_users, kind="stable")
    sorted_users = rt_users[order]
    occurrence = np.empty(rt_idx.size, dtype=np.int64)
    occurrence[order] = np.arange(rt_idx.size) - np.searchsorted(sorted_users, sorted_users)
    over = rt_idx[occurrence >= params.max_user_retweets]
    author[over] = params.author_pool + np.arange(over.size)

    users, author = np.unique(author, return_inverse=True)
    return _TopicDraw(ts, is_rt, root_event, author, users)


def _assemble(draws: Sequence[_TopicDraw], topic_keys: Sequence[str], source=None) -> EventStream:
    sizes = np.array([len(d) for d in draws])
    n_users = np.array([d.users.size for d in draws])
    ev_off = np.r_[0, np.cumsum(sizes)[:-1]]
    us_off = np.r_[0, np.cumsum(n_users)[:-1]]
    topic = np.repeat(np.arange(len(draws)), sizes)

    is_rt = np.concatenate([d.is_retweet for d in draws])
    root_local = np.concatenate([d.root_event for d in draws])
    root_event = np.where(root_local >= 0, root_local + ev_off[topic], NO_CODE)
    author = np.concatenate([d.author for d in draws]) + us_off[topic]
    root_author = np.full(author.size, NO_CODE, dtype=np.int64)
    root_author[is_rt] = author[root_event[is_rt]]

    user_topic = np.repeat(np.arange(len(draws)), n_users)
    user_numbers = np.concatenate([d.users for d in draws])
    local_event = np.arange(author.size) - ev_off[topic]
    return EventStream.from_columns(
        timestamp=np.concatenate([d.timestamp for d in draws]),
        is_retweet=is_rt,
        event_code=np.arange(author.size),
        author_code=author,
        root_post_code=root_event,
        root_author_code=root_author,
        topic_ptr=np.arange(author.size + 1),
        topic_code=topic,
        post_ids=_format_ids([f"{k}-e" for k in topic_keys], topic, local_event, _width(int(sizes.max()), 6)),
        user_ids=_format_ids([f"{k}-u" for k in topic_keys], user_topic, user_numbers,
                             _width(int(user_numbers.max()) + 1, 5)),
        topic_vocab=list(topic_keys),
        source=source,
        presorted=len(draws) == 1,
    )


def generate_organic_topic(params: OrganicTopicParams = OrganicTopicParams(), seed: int = 0,
                           topic_key: str = "topic", start: int = 0) -> EventStream:
    """Events of one organic topic whose first interval begins at ``start``.

    Each event is a retweet with probability ``retweet_share`` (the very first
    is always an original); a retweet's root is drawn uniformly from the
    topic's earlier originals. Timestamps are uniform within their interval.
    """
    draw = _draw_topic(params, np.random.default_rng(seed), start)
    return _assemble([draw], [normalize_topic(topic_key)])


# -- corpora -------------------------------------------------------------------

class Label(str, Enum):
    BOT = "bot"
    ORGANIC = "organic"


class TruthLabels(Mapping):
    """``user_id -> Label`` for every user appearing in a stream."""

    def __init__(self, users: np.ndarray, bots: frozenset[str]):
        self._users = users
        self._bots = bots

    def __getitem__(self, user_id):
        pos = np.searchsorted(self._users, user_id)
        if pos >= self._users.size or self._users[pos] != user_id:
            raise KeyError(user_id)
        return Label.BOT if user_id in self._bots else Label.ORGANIC

    def __iter__(self) -> Iterator[str]:
        return iter(self._users.tolist())

    def __len__(self):
        return int(self._users.size)


@dataclass(frozen=True, eq=False)
class LabeledCorpus:
    stream: EventStream
    bots: frozenset[str] = frozenset()
    topic_starts: Mapping[str, int] = field(default_factory=dict)
    scenario: dict = field(default_factory=dict)

    @property
    def truth(self) -> TruthLabels:
        s = self.stream
        used = np.union1d(np.unique(s.author_code), np.unique(s.root_author_code[s.root_author_code >= 0]))
        return TruthLabels(s.user_ids[used], self.bots)

    def ground_truth_suspects(self) -> SuspectSet:
        return SuspectSet.from_ids(self.bots, Reason.GROUND_TRUTH)


def generate_corpus(n_topics: int = 500, params: OrganicTopicParams = OrganicTopicParams(),
                    seed: int = 0, hours: int = 720, topic_prefix: str = "topic") -> LabeledCorpus:
    """``n_topics`` organic topics starting at random whole hours in ``[0, hours)``.

    Topic q is generated from its own generator derived from ``(seed, q)``, so
    topics are reproducible individually.
    """
    if n_topics < 1:
        raise ParamError("n_topics must be >= 1")
    width = _width(n_topics, 4)
    keys = [normalize_topic(f"{topic_prefix}-{q:0{width}d}") for q in range(n_topics)]
    start_hours = _rng(seed, 1).integers(0, hours, n_topics)
    starts = {k: int(h) * HOUR for k, h in zip(keys, start_hours)}
    draws = [_draw_topic(params, _rng(seed, 0, q), starts[k]) for q, k in enumerate(keys)]
    echo = {"n_topics": n_topics, "hours": hours, "seed": seed, "organic": asdict(params)}
    return LabeledCorpus(_assemble(draws, keys, source=f"synthetic(seed={seed})"),
                         frozenset(), starts, echo)


def inject_bots(corpus: LabeledCorpus | EventStream, scenarios: BotScenario | Sequence[BotScenario],
                seed: int = 0) -> LabeledCorpus:
    """Add bot accounts that retweet each target's earliest original post.

    Bot k of a scenario starts ``1 + U[0, inter_burst_gap)`` seconds after the
    root post, then emits ``bursts_per_bot`` bursts of ``burst_size`` retweets
    spaced ``intra_burst_gap`` apart, with ``inter_burst_gap`` of silence between
    bursts. Bots are named ``bot-NNNNNN``, numbered after any existing bots.
    """
    if isinstance(corpus, EventStream):
        corpus = LabeledCorpus(corpus)
    if isinstance(scenarios, BotScenario):
        scenarios = [scenarios]
    stream = corpus.stream
    next_bot = len(corpus.bots)

    originals = np.flatnonzero(~stream.is_retweet)
    posters, first = np.unique(stream.author_code[originals], return_index=True)
    target_codes = stream.user_codes([sc.target_author for sc in scenarios])

    ts_parts, bot_num_parts, bot_rt_parts, root_parts, target_parts = [], [], [], [], []
    for si, sc in enumerate(scenarios):
        if sc.n_bots == 0:
            continue
        code = target_codes[si]
        pos = np.searchsorted(posters, code)
        if code < 0 or pos >= posters.size or posters[pos] != code:
            raise TargetNotFound(f"{sc.target_author!r} has no original post in the stream")
        root = int(originals[first[pos]])
        rng = _rng(seed, 2, si)
        offsets = rng.integers(0, sc.inter_burst_gap, sc.n_bots) + 1
        span = (sc.burst_size - 1) * sc.intra_burst_gap + sc.inter_burst_gap
        schedule = (np.arange(sc.bursts_per_bot)[:, None] * span
                    + np.arange(sc.burst_size)[None, :] * sc.intra_burst_gap).ravel()
        per_bot = schedule.size
        ts_parts.append((stream.timestamp[root] + offsets[:, None] + schedule[None, :]).ravel())
        bot_num_parts.append(np.repeat(next_bot + np.arange(sc.n_bots), per_bot))
        bot_rt_parts.append(np.tile(np.arange(per_bot), sc.n_bots))
        root_parts.append(np.full(sc.n_bots * per_bot, root))
        target_parts.append(np.full(sc.n_bots * per_bot, code))
        next_bot += sc.n_bots

    echo = dict(corpus.scenario)
    echo["bots"] = list(echo.get("bots", [])) + [asdict(s) for s in scenarios]
    if not ts_parts:
        return LabeledCorpus(stream, corpus.bots, corpus.topic_starts, echo)

    ts = np.concatenate(ts_parts)
    bot_num = np.concatenate(bot_num_parts)
    bot_rt = np.concatenate(bot_rt_parts)
    root = np.concatenate(root_parts)
    target = np.concatenate(target_parts)
    n = ts.size

    first_bot = len(corpus.bots)
    bot_names = _seq_ids("bot-", np.arange(first_bot, next_bot), 6)
    event_ids = np.char.add(bot_names[bot_num - first_bot], "-r")
    event_ids = np.char.add(event_ids, _seq_ids("", bot_rt, _width(int(bot_rt.max()) + 1, 4)))

    # new events reference existing vocabularies for roots, targets and topics
    root_posts = stream.event_code[root]
    users, (remap_old_users, remap_bots) = merge_vocabs([stream.user_ids, bot_names])
    posts, (remap_old_posts, remap_new_posts) = merge_vocabs([stream.post_ids, event_ids])

    counts = np.diff(stream.topic_ptr)[root]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    starts = np.repeat(stream.topic_ptr[:-1][root], counts)
    within = np.arange(ptr[-1]) - np.repeat(ptr[:-1], counts)
    topic_codes = stream.topic_code[starts + within]

    comments = None
    if stream.comments is not None:
        comments = np.concatenate([stream.comments, np.full(n, None, dtype=object)])
    merged = EventStream.from_columns(
        timestamp=np.concatenate([stream.timestamp, ts]),
        is_retweet=np.concatenate([stream.is_retweet, np.ones(n, bool)]),
        event_code=np.concatenate([remap_old_posts[stream.event_code], remap_new_posts]),
        author_code=np.concatenate([remap_old_users[stream.author_code], remap_bots[bot_num - first_bot]]),
        root_post_code=np.concatenate([remap_codes(stream.root_post_code, remap_old_posts),
                                       remap_old_posts[root_posts]]),
        root_author_code=np.concatenate([remap_codes(stream.root_author_code, remap_old_users),
                                         remap_old_users[target]]),
        topic_ptr=np.concatenate([stream.topic_ptr, stream.topic_ptr[-1] + ptr[1:]]),
        topic_code=np.concatenate([stream.topic_code, topic_codes]),
        post_ids=posts, user_ids=users, topic_vocab=stream.topic_vocab,
        comments=comments, source=stream.source,
        duplicates_dropped=stream.duplicates_dropped,
    )
    bots = corpus.bots | frozenset(bot_names.tolist())
    return LabeledCorpus(merged, bots, corpus.topic_starts, echo)


def topic_targets(corpus: LabeledCorpus) -> dict[str, str]:
    """Author of the earliest original post of every topic."""
    s = corpus.stream
    ev, tc = s.topic_pairs()
    orig = ~s.is_retweet[ev]
    ev, tc = ev[orig], tc[orig]
    codes, first = np.unique(tc, return_index=True)  # pairs are in time order
    return dict(zip(s.topic_vocab[codes].tolist(), s.user_ids[s.author_code[ev[first]]].tolist()))


def spam_scenarios(corpus: LabeledCorpus, seed: int = 0, topic_fraction: float = 0.5,
                   target_share: float = 0.35, template: Mapping | None = None) -> list[BotScenario]:
    """Bot campaigns on a random ``topic_fraction`` of topics.

    Each campaign targets the author who opened the topic. Bot counts are sized
    so that bots end up with at least ``target_share`` of all retweets, spread
    over the campaigns in proportion to each topic's organic retweets.
    """
    if not 0 < topic_fraction <= 1 or not 0 <= target_share < 1:
        raise ParamError("topic_fraction must be in (0, 1] and target_share in [0, 1)")
    template = dict(template or {})
    per_bot = BotScenario("probe", **template).retweets_per_bot
    targets = topic_targets(corpus)
    topics = sorted(targets)
    s = corpus.stream
    ev, tc = s.topic_pairs()
    rt_per_code = np.bincount(tc[s.is_retweet[ev]], minlength=s.topic_vocab.size)
    rt_of = dict(zip(s.topic_vocab.tolist(), rt_per_code.tolist()))

    k = max(1, round(topic_fraction * len(topics)))
    chosen = sorted(_rng(seed, 3).choice(len(topics), size=k, replace=False).tolist())
    organic_total = int(s.is_retweet.sum())
    needed = target_share / (1 - target_share) * organic_total
    chosen_total = sum(rt_of[topics[c]] for c in chosen) or 1
    out = []
    for c in chosen:
        topic = topics[c]
        bots = math.ceil(needed * rt_of[topic] / chosen_total / per_bot)
        out.append(BotScenario(targets[topic], n_bots=bots, **template))
    return out


@dataclass(frozen=True)
class DetectionReport:
    precision: float | None
    recall: float | None
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_detection(corpus: LabeledCorpus, suspects: SuspectSet) -> DetectionReport:
    """Precision and recall of flagged users against the bot labels.

    Precision is ``None`` when nothing was flagged; recall is ``None`` when the
    corpus has no bots.
    """
    truth = corpus.truth
    flagged = {u for u in suspects.members if u in truth}
    bots = set(corpus.bots)
    tp = len(flagged & bots)
    fp = len(flagged) - tp
    fn = len(bots) - tp
    tn = len(truth) - tp - fp - fn
    return DetectionReport(
        precision=tp / len(flagged) if flagged else None,
        recall=tp / len(bots) if bots else None,
        true_positives=tp, false_positives=fp, false_negatives=fn, true_negatives=tn,
    )


# -- scenario files ------------------------------------------------------------

@dataclass(frozen=True)
class SimulationScenario:
    n_topics: int = 500
    hours: int = 720
    organic: OrganicTopicParams = OrganicTopicParams()
    spam_topic_fraction: float = 0.5
    spam_target_share: float = 0.0
    bot: Mapping = field(default_factory=dict)


def load_scenario(path) -> SimulationScenario:
    """Read a JSON scenario.

    ``{"n_topics": .., "hours": .., "organic": {OrganicTopicParams fields},
    "spam": {"topic_fraction": .., "target_share": .., "bot": {BotScenario fields
    except target_author and n_bots}}}``; every key is optional.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return scenario_from_dict(data)


def scenario_from_dict(data: Mapping) -> SimulationScenario:
    unknown = set(data) - {"n_topics", "hours", "organic", "spam"}
    if unknown:
        raise ParamError(f"unknown scenario keys: {sorted(unknown)}")
    spam = dict(data.get("spam") or {})
    bot = dict(spam.pop("bot", {}) or {})
    if {"target_author", "n_bots"} & set(bot):
        raise ParamError("bot template must not set target_author or n_bots")
    BotScenario("probe", **bot)
    extra = set(spam) - {"topic_fraction", "target_share"}
    if extra:
        raise ParamError(f"unknown spam keys: {sorted(extra)}")
    return SimulationScenario(
        n_topics=int(data.get("n_topics", 500)),
        hours=int(data.get("hours", 720)),
        organic=_from_dict(OrganicTopicParams, data.get("organic") or {}),
        spam_topic_fraction=float(spam.get("topic_fraction", 0.5)),
        spam_target_share=float(spam.get("target_share", 0.0)),
        bot=bot,
    )


def simulate(scenario: SimulationScenario, seed: int) -> LabeledCorpus:
    """Organic corpus, plus bot campaigns when ``spam_target_share > 0``."""
    corpus = generate_corpus(scenario.n_topics, scenario.organic, seed, scenario.hours)
    if scenario.spam_target_share > 0:
        plans = spam_scenarios(corpus, seed, scenario.spam_topic_fraction,
                               scenario.spam_target_share, scenario.bot)
        corpus = inject_bots(corpus, plans, seed)
    return corpus


def write_truth_csv(corpus: LabeledCorpus, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "label"])
        for uid, label in corpus.truth.items():
            w.writerow([uid, label.value])


def load_truth_csv(path) -> dict[str, Label]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["user_id"]: Label(row["label"]) for row in csv.DictReader(fh)}
