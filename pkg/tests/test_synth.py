import numpy as np
import pytest

from helpers import ev, stream_of
from trendspam import synth
from trendspam.errors import ParamError, TargetNotFound
from trendspam.spamdetect import SuspectSet, burst_features, user_retweet_profiles
from trendspam.synth import (
    BotScenario,
    Label,
    OrganicTopicParams,
    evaluate_detection,
    generate_corpus,
    generate_organic_topic,
    inject_bots,
    interval_counts,
)


def test_strong_decay_collapses_counts():
    params = OrganicTopicParams(theta=5.0, g_sigma=0.0, seed_count=20)
    n = interval_counts(params, np.random.default_rng(0))
    assert n[0] == 20 and n[3] <= 1 and np.all(n[4:] == 0)


def test_deterministic_growth_without_noise_or_decay():
    # ln X = 0 and no decay: each interval adds the whole running total
    params = OrganicTopicParams(g_mu=0.0, g_sigma=0.0, theta=0.0, seed_count=3, intervals=6)
    n = interval_counts(params, np.random.default_rng(0))
    assert n.tolist() == [3, 3, 6, 12, 24, 48]


def test_growth_recurrence():
    params = OrganicTopicParams(g_mu=0.1, g_sigma=0.0, theta=0.5, seed_count=50, intervals=5)
    n = interval_counts(params, np.random.default_rng(0))
    total = 50
    for t in range(2, 6):
        assert n[t - 1] == round(total * np.exp(0.1) * t ** -0.5)
        total += n[t - 1]


def test_organic_topic_structure():
    s = generate_organic_topic(seed=5, topic_key="Rain", start=3600)
    events = s.events
    assert events[0].kind.value == "original" and events[0].timestamp >= 3600
    ids = {e.event_id: e for e in events}
    for e in events:
        assert e.topic_keys == {"rain"}
        if e.is_retweet:
            root = ids[e.root_post_id]
            assert not root.is_retweet and root.author_id == e.root_author_id
            assert root.timestamp <= e.timestamp
    assert max(p.ratio for p in user_retweet_profiles(s).values()) <= 4
    assert np.all(np.diff(s.timestamp) >= 0)


def test_same_seed_same_corpus():
    a, b = generate_corpus(n_topics=20, seed=9), generate_corpus(n_topics=20, seed=9)
    assert list(a.stream.to_records()) == list(b.stream.to_records())
    c = generate_corpus(n_topics=20, seed=10)
    assert list(a.stream.to_records()) != list(c.stream.to_records())


def test_organic_ratios_bounded_by_construction():
    corpus = generate_corpus(n_topics=100, seed=1)
    assert user_retweet_profiles(corpus.stream).ratios.max() <= 4
    assert all(label is Label.ORGANIC for label in corpus.truth.values())


@pytest.mark.parametrize("kwargs", [{"intervals": 1}, {"seed_count": 0}, {"g_sigma": -1.0},
                                    {"theta": -0.1}, {"retweet_share": 1.5}, {"author_pool": 0}])
def test_param_errors(kwargs):
    with pytest.raises(ParamError):
        OrganicTopicParams(**kwargs)


def test_bot_param_errors():
    with pytest.raises(ParamError):
        BotScenario("a", burst_size=1)
    with pytest.raises(ParamError):
        BotScenario("a", intra_burst_gap=10, inter_burst_gap=5)


def test_zero_bots_leaves_corpus_alone():
    corpus = generate_corpus(n_topics=5, seed=2)
    target = synth.topic_targets(corpus)["topic-0000"]
    out = inject_bots(corpus, BotScenario(target, n_bots=0))
    assert out.stream is corpus.stream and not out.bots
    assert set(out.truth.values()) == {Label.ORGANIC}


def test_single_bot_two_bursts():
    base = stream_of(ev("p", 100, "star", {"x"}), ev("q", 200, "other", {"y"}))
    corpus = inject_bots(base, BotScenario("star", n_bots=1, bursts_per_bot=2, burst_size=5,
                                           intra_burst_gap=3, inter_burst_gap=3600), seed=4)
    (bot,) = corpus.bots
    prof = user_retweet_profiles(corpus.stream)[bot]
    assert (prof.retweet_count, prof.distinct_targets, prof.ratio) == (10, 1, 10.0)
    feats = burst_features(corpus.stream, bot)
    assert feats.burst_count == 2 and feats.median_intra_burst_gap == 3.0 and feats.max_repeats == 10
    rts = [e for e in corpus.stream.events if e.author_id == bot]
    assert all(e.root_post_id == "p" and e.topic_keys == {"x"} and e.timestamp > 100 for e in rts)


def test_missing_target():
    with pytest.raises(TargetNotFound):
        inject_bots(stream_of(ev("p", 0, "a")), BotScenario("ghost"))


def test_bots_numbered_after_existing_ones():
    base = stream_of(ev("p", 0, "a", {"x"}))
    once = inject_bots(base, BotScenario("a", n_bots=2), seed=1)
    twice = inject_bots(once, BotScenario("a", n_bots=1), seed=2)
    assert sorted(twice.bots) == ["bot-000000", "bot-000001", "bot-000002"]


def test_spam_scenarios_reach_target_share():
    corpus = generate_corpus(n_topics=40, seed=3)
    spam = inject_bots(corpus, synth.spam_scenarios(corpus, seed=3, target_share=0.35), seed=3)
    s = spam.stream
    bot_rt = np.isin(s.author_code[s.is_retweet], s.user_codes(sorted(spam.bots))).mean()
    assert 0.35 <= bot_rt < 0.40
    assert user_retweet_profiles(s).ratios[np.isin(user_retweet_profiles(s).user_ids,
                                                   sorted(spam.bots))].min() >= 30


def test_detection_report():
    base = stream_of(ev("p", 0, "a", {"x"}), ev("r", 5, "h", {"x"}, "p", "a"))
    corpus = inject_bots(base, BotScenario("a", n_bots=2))
    exact = evaluate_detection(corpus, SuspectSet.from_ids(corpus.bots))
    assert (exact.precision, exact.recall, exact.true_positives, exact.true_negatives) == (1.0, 1.0, 2, 2)
    empty = evaluate_detection(corpus, SuspectSet({}))
    assert empty.precision is None and empty.recall == 0.0
    wrong = evaluate_detection(corpus, SuspectSet.from_ids(["h", "bot-000000"]))
    assert (wrong.precision, wrong.recall, wrong.false_positives, wrong.false_negatives) == (0.5, 0.5, 1, 1)


def test_scenario_files_and_truth(tmp_path):
    path = tmp_path / "s.json"
    path.write_text('{"n_topics": 10, "hours": 24, "organic": {"seed_count": 10},'
                    ' "spam": {"target_share": 0.3, "bot": {"burst_size": 5}}}')
    scenario = synth.load_scenario(path)
    assert scenario.organic.seed_count == 10 and scenario.bot == {"burst_size": 5}
    corpus = synth.simulate(scenario, seed=1)
    assert corpus.bots
    synth.write_truth_csv(corpus, tmp_path / "t.csv")
    truth = synth.load_truth_csv(tmp_path / "t.csv")
    assert {u for u, lab in truth.items() if lab is Label.BOT} == corpus.bots


@pytest.mark.parametrize("data", [{"bogus": 1}, {"organic": {"nope": 1}}, {"spam": {"bot": {"n_bots": 3}}},
                                  {"spam": {"extra": 1}}])
def test_scenario_validation(data):
    with pytest.raises(ParamError):
        synth.scenario_from_dict(data)
