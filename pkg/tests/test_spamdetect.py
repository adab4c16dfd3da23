import numpy as np
import pytest

from helpers import ev, profiles_oracle, random_events, stream_of
from trendspam import synth
from trendspam.errors import EmptySuspects, TooFewEvents
from trendspam.spamdetect import (
    AccountStatus,
    RatioBand,
    Reason,
    RetweetProfile,
    SpamPolicy,
    SuspectSet,
    TrendsetterRow,
    active_fraction_by_ratio,
    burst_features,
    flag_suspects,
    load_allowlist,
    load_statuses,
    rank_rows,
    rank_trendsetters,
    remove_spam,
    trendsetter_impact,
    trendsetter_table,
    user_retweet_profiles,
)


def _fan_stream(n_rt=134, user="1840241580"):
    events = [ev("p0", 0, "author", {"x"})]
    events += [ev(f"r{k:03d}", 10 + k, user, {"x"}, "p0", "author") for k in range(n_rt)]
    return stream_of(*events)


def test_single_target_ratio():
    p = user_retweet_profiles(_fan_stream())["1840241580"]
    assert (p.retweet_count, p.distinct_targets, p.ratio) == (134, 1, 134.0)


def test_single_retweet_ratio_one():
    assert user_retweet_profiles(_fan_stream(1))["1840241580"].ratio == 1.0


def test_profiles_match_rescan():
    events = random_events(np.random.default_rng(31), 600)
    profiles = user_retweet_profiles(stream_of(*events))
    oracle = profiles_oracle(events)
    assert set(profiles) == set(oracle)
    for u, (r, t) in oracle.items():
        assert (profiles[u].retweet_count, profiles[u].distinct_targets) == (r, t)


def test_flag_high_ratio():
    suspects = flag_suspects(user_retweet_profiles(_fan_stream()), policy=SpamPolicy(ratio_threshold=30))
    assert suspects.members == {"1840241580"}
    assert suspects.reasons["1840241580"] == {Reason.HIGH_RATIO}


def test_flag_nothing_for_ratio_one():
    profiles = {f"u{k}": RetweetProfile(f"u{k}", 1, 1) for k in range(5)}
    statuses = {u: AccountStatus.ACTIVE for u in profiles}
    assert len(flag_suspects(profiles, statuses, SpamPolicy(30, use_status=True))) == 0


def test_flag_deleted_and_allowlist():
    profiles = {"a": RetweetProfile("a", 50, 1), "b": RetweetProfile("b", 2, 2), "c": RetweetProfile("c", 40, 1)}
    statuses = {"b": AccountStatus.DELETED, "a": AccountStatus.DELETED}
    s = flag_suspects(profiles, statuses, SpamPolicy(30, use_status=True, allowlist=frozenset({"c"})))
    assert s.reasons == {"a": {Reason.HIGH_RATIO, Reason.DELETED_ACCOUNT}, "b": {Reason.DELETED_ACCOUNT}}
    assert s.to_rows() == [("a", "deleted_account|high_ratio"), ("b", "deleted_account")]
    assert flag_suspects(profiles, statuses, SpamPolicy(30)).members == {"a", "c"}


def test_flag_rejects_threshold_below_one():
    with pytest.raises(ValueError):
        flag_suspects({}, policy=SpamPolicy(0.5))


def test_flagged_equals_ground_truth_on_synthetic_corpus():
    corpus = synth.generate_corpus(n_topics=60, seed=2)
    corpus = synth.inject_bots(corpus, synth.spam_scenarios(corpus, seed=2), seed=2)
    flagged = flag_suspects(user_retweet_profiles(corpus.stream))
    assert flagged.members == corpus.bots


def test_band_fractions_all_active():
    profiles = {f"u{r}": RetweetProfile(f"u{r}", r, 1) for r in range(1, 40)}
    rows = active_fraction_by_ratio(profiles, {u: AccountStatus.ACTIVE for u in profiles})
    assert all(r.active_pct == 100.0 and r.inactive_pct == 0.0 for r in rows if r.n_users)


def test_band_missing_status_counts_inactive_and_empty_band_is_null():
    profiles = {"a": RetweetProfile("a", 3, 1), "b": RetweetProfile("b", 3, 1)}
    rows = {r.band: r for r in active_fraction_by_ratio(profiles, {"a": AccountStatus.ACTIVE})}
    assert (rows["3"].active_pct, rows["3"].inactive_pct) == (50.0, 50.0)
    assert rows[">=30"].n_users == 0 and rows[">=30"].active_pct is None


def test_band_overlap_and_gap_rejected():
    profiles = {"a": RetweetProfile("a", 3, 1)}
    with pytest.raises(ValueError):
        active_fraction_by_ratio(profiles, {}, [RatioBand(1, None, "a"), RatioBand(2, 5, "b")])
    with pytest.raises(ValueError):
        active_fraction_by_ratio(profiles, {}, [RatioBand(5, None, "a")])


def test_status_and_allowlist_files(tmp_path):
    (tmp_path / "s.csv").write_text("user_id,status\na,Active\nb,deleted\nc,suspended\n")
    assert load_statuses(tmp_path / "s.csv") == {"a": AccountStatus.ACTIVE, "b": AccountStatus.DELETED,
                                                  "c": AccountStatus.UNKNOWN}
    (tmp_path / "a.txt").write_text("# keep\nx\n\n y \n")
    assert load_allowlist(tmp_path / "a.txt") == {"x", "y"}


def _mixed_stream():
    return stream_of(
        ev("p0", 0, "a", {"x"}), ev("p1", 1, "s", {"y"}),
        ev("r0", 2, "s", {"x"}, "p0", "a"),   # suspect retweet
        ev("r1", 3, "b", {"y"}, "p1", "s"),   # retweet of a suspect post
        ev("r2", 4, "b", {"x"}, "p0", "a"),   # organic
        ev("r3", 5, "c", {"x"}, "p0", "a"),   # organic
    )


def test_remove_spam_drops_three_kinds():
    cleaned, report = remove_spam(_mixed_stream(), SuspectSet.from_ids(["s"]))
    assert cleaned.event_ids.tolist() == ["p0", "r2", "r3"]
    assert (report.removed_retweets, report.removed_originals) == (2, 1)
    assert report.removed_fraction_of_retweets == 0.5
    assert report.removed_fraction_of_all_tweets == 0.5
    assert report.remaining_events == 3 and report.remaining_retweets == 2
    assert report.suspects_fraction_of_users == 0.25
    assert report.suspects_fraction_of_retweeters == 1 / 3


def test_remove_spam_idle_suspect():
    s = _mixed_stream()
    cleaned, report = remove_spam(s, SuspectSet.from_ids(["nobody"]))
    assert list(cleaned.to_records()) == list(s.to_records())
    assert report.removed_fraction_of_retweets == 0 and report.removed_fraction_of_all_tweets == 0


def test_remove_spam_needs_suspects():
    with pytest.raises(EmptySuspects):
        remove_spam(_mixed_stream(), SuspectSet({}))


def test_remove_spam_rescan_on_synthetic_corpus():
    corpus = synth.generate_corpus(n_topics=30, seed=6)
    corpus = synth.inject_bots(corpus, synth.spam_scenarios(corpus, seed=6), seed=6)
    bots = corpus.bots
    cleaned, _ = remove_spam(corpus.stream, corpus.ground_truth_suspects())
    for e in cleaned.events:
        assert e.author_id not in bots and e.root_author_id not in bots


def test_impact_fractions():
    s = _mixed_stream()
    none = trendsetter_impact(s, [], ["x", "y"])
    assert (none.fraction_retweeted_authors_touched, none.fraction_trending_keywords_touched) == (0.0, 0.0)
    every = trendsetter_impact(s, ["s", "b", "c"], ["x", "y"])
    assert (every.fraction_retweeted_authors_touched, every.fraction_trending_keywords_touched) == (1.0, 1.0)


def test_impact_constructed_proportions():
    # 100 retweeted authors, 68 of them retweeted by the suspect;
    # 50 trending keywords, 49 of them carried by suspect retweets
    events = []
    for a in range(100):
        events.append(ev(f"p{a:03d}", a, f"author{a:03d}", {f"kw{a % 50:02d}"}))
        retweeter, kw = ("spammer", f"kw{a % 49:02d}") if a < 68 else ("fan", f"kw{a % 50:02d}")
        events.append(ev(f"r{a:03d}", 1000 + a, retweeter, {kw}, f"p{a:03d}", f"author{a:03d}"))
    keywords = [f"kw{t:02d}" for t in range(50)]
    rep = trendsetter_impact(stream_of(*events), ["spammer"], keywords)
    assert rep.fraction_retweeted_authors_touched == 0.68
    assert rep.fraction_trending_keywords_touched == 0.98


def test_trendsetter_score_and_cutoff():
    rows = [TrendsetterRow("big", 1194999, 40, 12), TrendsetterRow("nine", 900, 3, 9),
            TrendsetterRow("small", 120, 5, 12)]
    ranked = rank_rows(rows, min_topics=10)
    assert [r.author_id for r in ranked] == ["big", "small"]
    assert ranked[0].score == 99583.25


def test_trendsetter_ranking_matches_oracle():
    events = random_events(np.random.default_rng(33), 800, n_users=15, n_topics=12)
    table = {r.author_id: r for r in trendsetter_table(stream_of(*events))}
    for author in {e.root_author_id for e in events if e.is_retweet}:
        rts = [e for e in events if e.is_retweet and e.root_author_id == author]
        row = table[author]
        assert row.times_retweeted == len(rts)
        assert row.distinct_tweets_retweeted == len({e.root_post_id for e in rts})
        assert row.topics_appeared_in == len({t for e in rts for t in e.topic_keys})
    ranked = rank_trendsetters(stream_of(*events), min_topics=3)
    expect = sorted((r for r in table.values() if r.topics_appeared_in >= 3), key=lambda r: (-r.score, r.author_id))
    assert ranked == expect


def test_burst_features_arithmetic():
    events = [ev("p", 0, "a", {"x"})]
    events += [ev(f"r{t}", t, "bot", {"x"}, "p", "a") for t in (0, 5, 10, 4000, 4005)]
    f = burst_features(stream_of(*events), "bot")
    assert (f.burst_count, f.median_intra_burst_gap, f.max_repeats) == (2, 5.0, 5)


def test_burst_features_no_intra_gaps():
    events = [ev("p", 0, "a", {"x"}), ev("r0", 10, "u", {"x"}, "p", "a"), ev("r1", 3610, "u", {"x"}, "p", "a")]
    f = burst_features(stream_of(*events), "u")
    assert f.burst_count == 2 and f.median_intra_burst_gap is None


def test_burst_features_bot_versus_organic():
    # with a one-hour window the human's exponential gaps (mean 2 h) still
    # look slow while the bot's 3 s bursts stay tight
    rng = np.random.default_rng(34)
    organic_ts = np.cumsum(rng.exponential(7200, 60)).astype(int) + 1
    organic = [ev(f"o{k:02d}", int(t), "human", {"x"}, "p", "a") for k, t in enumerate(organic_ts)]
    base = stream_of(ev("p", 0, "a", {"x"}), *organic)
    stream = synth.inject_bots(base, synth.BotScenario("a", n_bots=1), seed=1).stream
    bot = burst_features(stream, "bot-000000", burst_gap=3600)
    human = burst_features(stream, "human", burst_gap=3600)
    assert bot.median_intra_burst_gap < 10
    assert human.median_intra_burst_gap > 600


def test_burst_features_needs_two_retweets():
    with pytest.raises(TooFewEvents):
        burst_features(_fan_stream(1), "1840241580")
