import numpy as np
import pytest

from helpers import ev, random_events, stream_of
from trendspam.errors import (
    DuplicateEventId,
    KindLineageMismatch,
    MissingField,
    NonNumericTimestamp,
    TimestampRangeError,
)
from trendspam.events import EventStream, Kind, PostEvent, merge_vocabs, normalize_topic, validate_event


def test_minimal_original_is_valid():
    e = validate_event({"event_id": "e1", "timestamp": 100, "author_id": "u1", "kind": "original",
                        "topics": ["rain"]})
    assert e == PostEvent("e1", 100, "u1", Kind.ORIGINAL, topic_keys=frozenset({"rain"}))


def test_retweet_without_root_rejected():
    with pytest.raises(KindLineageMismatch):
        validate_event({"event_id": "e2", "timestamp": 100, "author_id": "u2", "kind": "retweet", "topics": []})


def test_original_with_root_rejected():
    with pytest.raises(KindLineageMismatch):
        validate_event({"event_id": "e", "timestamp": 1, "author_id": "u", "kind": "original",
                        "root_post_id": "p", "root_author_id": "a"})


def test_negative_timestamp_rejected():
    with pytest.raises(TimestampRangeError):
        validate_event({"event_id": "e3", "timestamp": -5, "author_id": "u", "kind": "original"})


@pytest.mark.parametrize("ts", ["soon", 1.5, float("nan"), True])
def test_non_numeric_timestamp(ts):
    with pytest.raises(NonNumericTimestamp):
        validate_event({"event_id": "e", "timestamp": ts, "author_id": "u", "kind": "original"})


@pytest.mark.parametrize("missing", ["event_id", "timestamp", "author_id", "kind"])
def test_missing_field(missing):
    rec = {"event_id": "e", "timestamp": 1, "author_id": "u", "kind": "original"}
    del rec[missing]
    with pytest.raises(MissingField) as info:
        validate_event(rec)
    assert info.value.field == missing


def test_topics_normalized_from_pipe_string():
    e = validate_event({"event_id": "e", "timestamp": "7", "author_id": "u", "kind": "Original",
                        "topics": " Rain | SNOW||"})
    assert e.topic_keys == {"rain", "snow"} and e.timestamp == 7
    assert normalize_topic("  Straße ") == "strasse"


def test_stream_sorted_by_time_then_id():
    s = stream_of(ev("b", 5, "u"), ev("a", 5, "u"), ev("c", 1, "u"))
    assert s.event_ids.tolist() == ["c", "a", "b"]


def test_duplicate_ids_rejected_or_dropped():
    events = [ev("a", 1, "u"), ev("a", 2, "v"), ev("b", 3, "u")]
    with pytest.raises(DuplicateEventId):
        EventStream.from_events(events)
    s = EventStream.from_events(events, dedupe=True)
    assert len(s) == 2 and s.metadata.duplicates_dropped == 1
    assert s[0].author_id == "u"


def test_events_round_trip():
    rng = np.random.default_rng(3)
    events = random_events(rng, 300)
    s = stream_of(*events)
    assert sorted(s.events, key=lambda e: e.event_id) == sorted(events, key=lambda e: e.event_id)
    assert s.metadata.event_count == 300
    assert s.metadata.retweet_count == sum(e.is_retweet for e in events)


def test_select_and_concat_preserve_events():
    rng = np.random.default_rng(4)
    events = random_events(rng, 200)
    s = stream_of(*events)
    left, right = s.select(s.timestamp < 3600), s.select(s.timestamp >= 3600)
    assert len(left) + len(right) == len(s)
    merged = EventStream.concat([right, left])
    assert list(merged.to_records()) == list(s.to_records())


def test_concat_rejects_cross_stream_duplicates():
    a = stream_of(ev("x", 1, "u"))
    b = stream_of(ev("x", 2, "v"))
    with pytest.raises(DuplicateEventId):
        EventStream.concat([a, b])


def test_merge_vocabs_remaps_to_union():
    union, remaps = merge_vocabs([np.array(["a", "c"]), np.array(["b", "c", "d"])])
    assert union.tolist() == ["a", "b", "c", "d"]
    assert [r.tolist() for r in remaps] == [[0, 2], [1, 2, 3]]


def test_comment_text_kept():
    s = stream_of(ev("p", 0, "a", {"x"}), ev("r", 1, "b", {"x"}, "p", "a", comment="nice"))
    assert s[1].comment_text == "nice" and s[0].comment_text is None


def test_merge_vocabs_keeps_longer_strings():
    union, _ = merge_vocabs([np.array(["a", "human"]), np.array(["bot-000000"])])
    assert union.tolist() == ["a", "bot-000000", "human"]
