"""Trending-topic growth analysis and retweet-spam detection for event streams."""
from .events import EventStream, Kind, PostEvent, StreamMetadata, normalize_topic, validate_event
from .ingest import BucketedStream, bucketize, load_stream, write_csv, write_jsonl
from .trending import (
    TrendEpisode,
    TrendingSnapshot,
    band_persistence,
    build_episodes,
    compute_snapshots,
    trend_starts,
)
from .growth import CumulativeSeries, RatioSample, Subset, cumulative_series, ratio, ratio_distribution
from .statfit import (
    KsResult,
    LognormalFit,
    PowerlawFit,
    fit_lognormal,
    fit_powerlaw,
    histogram,
    ks_critical_value,
    ks_test_lognormal,
)
from .spamdetect import (
    AccountStatus,
    RemovalReport,
    RetweetProfile,
    SpamPolicy,
    SuspectSet,
    active_fraction_by_ratio,
    burst_features,
    flag_suspects,
    rank_trendsetters,
    remove_spam,
    trendsetter_impact,
    user_retweet_profiles,
)
from .synth import (
    BotScenario,
    LabeledCorpus,
    OrganicTopicParams,
    evaluate_detection,
    generate_corpus,
    generate_organic_topic,
    inject_bots,
    simulate,
    spam_scenarios,
)

__version__ = "0.1.0"
