"""Batch command line: ``trendspam <subcommand> [flags]``.

Every run writes its files under ``--out`` together with ``manifest.json``.
The manifest is written first with ``"status": "incomplete"`` and rewritten
last with the produced files, their SHA-256 digests and the run config.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import growth, ingest, spamdetect, statfit, synth, trending
from .errors import TrendSpamError
from .events import EventStream

log = logging.getLogger("trendspam")

MANIFEST = "manifest.json"
DEFAULT_FRAMES = ((10, 2), (8, 3))


# -- config and output bookkeeping ----------------------------------------------

@dataclass
class RunConfig:
    command: str
    inputs: list[str]
    out: str
    bucket: int | None = None
    k: int = 50
    frames: list[tuple[int, int]] = field(default_factory=list)
    subsets: list[str] = field(default_factory=list)
    ratio_threshold: float = 5.0
    status_file: str | None = None
    allowlist: str | None = None
    scenario: str | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def echo(self) -> dict:
        d = asdict(self)
        d["frames"] = [f"{i}:{j}" for i, j in self.frames]
        return d


class Output:
    """Tracks files written under the output directory."""

    def __init__(self, root: Path, config: RunConfig):
        self.root = root
        self.config = config
        self.files: list[str] = []
        root.mkdir(parents=True, exist_ok=True)
        self._write_manifest("incomplete")

    def path(self, name: str) -> Path:
        if name not in self.files:
            self.files.append(name)
        return self.root / name

    def json(self, name: str, data) -> None:
        with open(self.path(name), "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, ensure_ascii=False)
            fh.write("\n")

    def csv(self, name: str, header: Sequence[str], rows) -> None:
        with open(self.path(name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    def _write_manifest(self, status: str, files=()) -> None:
        data = {"status": status, "command": self.config.command,
                "config": self.config.echo(), "files": list(files)}
        with open(self.root / MANIFEST, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, ensure_ascii=False)
            fh.write("\n")

    def finish(self) -> None:
        files = []
        for name in sorted(self.files):
            digest = hashlib.sha256((self.root / name).read_bytes()).hexdigest()
            files.append({"path": name, "sha256": digest})
        self._write_manifest("complete", files)


# -- argument types ---------------------------------------------------------------

def _frames(text: str) -> list[tuple[int, int]]:
    pairs = []
    for part in text.split(","):
        try:
            i, j = (int(x) for x in part.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad frame pair {part!r}, expected i:j") from None
        if not i > j >= 1:
            raise argparse.ArgumentTypeError(f"frame pair {part!r} needs i > j >= 1")
        pairs.append((i, j))
    return pairs


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _threshold(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v >= 1:
        raise argparse.ArgumentTypeError(f"ratio threshold must be >= 1, got {v}")
    return v


# -- shared steps ----------------------------------------------------------------

def _load(paths: Sequence[str]) -> EventStream:
    streams = [ingest.load_stream(p) for p in paths]
    if len(streams) == 1:
        return streams[0]
    return EventStream.concat(streams, source="+".join(paths))


def _policy(cfg: RunConfig) -> spamdetect.SpamPolicy:
    allow = spamdetect.load_allowlist(cfg.allowlist) if cfg.allowlist else frozenset()
    return spamdetect.SpamPolicy(cfg.ratio_threshold, use_status=cfg.status_file is not None,
                                 allowlist=allow)


def _statuses(cfg: RunConfig):
    return spamdetect.load_statuses(cfg.status_file) if cfg.status_file else None


def _read_suspects(path) -> spamdetect.SuspectSet:
    with open(path, newline="", encoding="utf-8") as fh:
        ids = [row["user_id"] for row in csv.DictReader(fh)]
    return spamdetect.SuspectSet.from_ids(ids, policy=f"from {path}")


def _suspects(cfg: RunConfig, stream: EventStream) -> spamdetect.SuspectSet:
    path = cfg.extra.get("suspects")
    if path:
        return _read_suspects(path)
    profiles = spamdetect.user_retweet_profiles(stream)
    return spamdetect.flag_suspects(profiles, _statuses(cfg), _policy(cfg))


def _trend_starts(stream: EventStream, k: int) -> tuple[list, list, dict[str, int]]:
    snaps = trending.compute_snapshots(stream, k=k)
    episodes = trending.build_episodes(snaps)
    return snaps, episodes, trending.trend_starts(episodes)


def _ratio_samples(stream, starts, frames, subsets, width, strict=True):
    samples, problems = [], []
    for subset in subsets:
        for pair in frames:
            try:
                samples.append(growth.ratio_distribution(stream, pair, t0s=starts, width=width,
                                                         subset=subset))
            except TrendSpamError as exc:
                if strict:
                    raise
                problems.append({"subset": subset, "frames": f"{pair[0]}:{pair[1]}", "error": str(exc)})
    return samples, problems


def _lognormal_row(values, alpha=0.05, **labels) -> dict:
    fit = statfit.fit_lognormal(values)
    ks = statfit.ks_test_lognormal(values, fit, alpha)
    return {**labels, "n": fit.n, "mu": fit.mu, "sigma": fit.sigma, "d_stat": ks.d_stat,
            "critical_value": ks.critical_value, "passed": ks.passed}


def _fit_samples(samples, strict=True) -> list[dict]:
    rows = []
    for s in samples:
        labels = {"subset": s.subset.value, "frames": f"{s.frame_pair[0]}:{s.frame_pair[1]}"}
        try:
            rows.append(_lognormal_row(s.values, **labels))
        except TrendSpamError as exc:
            if strict:
                raise
            rows.append({**labels, "n": len(s), "error": str(exc)})
    return rows


def _write_ratios(out: Output, name: str, samples) -> None:
    growth.write_ratio_csv(samples, out.path(name))


def _trendsetter_rows(rows):
    return [(r.author_id, r.times_retweeted, r.distinct_tweets_retweeted, r.topics_appeared_in,
             repr(r.score)) for r in rows]


TRENDSETTER_HEADER = ["author_id", "times_retweeted", "distinct_tweets_retweeted",
                      "topics_appeared_in", "score"]


# -- subcommands -----------------------------------------------------------------

def cmd_ingest(cfg: RunConfig, out: Output) -> None:
    stream = _load(cfg.inputs)
    ingest.write_jsonl(stream, out.path("events.jsonl"))
    out.json("metadata.json", stream.metadata.to_dict())
    if cfg.bucket:
        b = ingest.bucketize(stream, cfg.bucket)
        out.csv("buckets.csv", ["bucket_start", "events"],
                zip(b.starts.tolist(), b.counts.tolist()))


def cmd_trends(cfg: RunConfig, out: Output) -> None:
    stream = _load(cfg.inputs)
    snaps = trending.compute_snapshots(stream, k=cfg.k, width=cfg.bucket)
    episodes = trending.build_episodes(snaps, width=cfg.bucket)
    trending.write_snapshots_csv(snaps, out.path("snapshots.csv"))
    trending.write_episodes_csv(episodes, out.path("episodes.csv"))
    if cfg.k % 2 == 0 and episodes:
        out.csv("band_persistence.csv", ["hours_on_list", "bottom_band_fraction"],
                ((d, repr(f)) for d, f in trending.band_persistence(episodes, cfg.k)))


def cmd_ratios(cfg: RunConfig, out: Output) -> None:
    stream = _load(cfg.inputs)
    _, _, starts = _trend_starts(stream, cfg.k)
    samples, _ = _ratio_samples(stream, starts, cfg.frames, cfg.subsets, cfg.bucket)
    _write_ratios(out, "ratios.csv", samples)


def _read_sample_groups(path, column: str) -> dict[tuple, list[float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise TrendSpamError(f"{path}: no column {column!r}")
        grouped = {"i", "j", "subset"} <= set(reader.fieldnames)
        groups: dict[tuple, list[float]] = {}
        for line, row in enumerate(reader, start=2):
            try:
                value = float(row[column])
            except ValueError:
                raise TrendSpamError(f"{path}:{line}: non-numeric {column!r}") from None
            key = (row["subset"], int(row["i"]), int(row["j"])) if grouped else ()
            groups.setdefault(key, []).append(value)
    if not groups:
        raise TrendSpamError(f"{path}: no values")
    return groups


def cmd_fit(cfg: RunConfig, out: Output) -> None:
    column, dist = cfg.extra["column"], cfg.extra["dist"]
    bins, log_bins = cfg.extra["bins"], cfg.extra["log_bins"]
    fits = []
    for key, values in sorted(_read_sample_groups(cfg.inputs[0], column).items()):
        labels = {"subset": key[0], "frames": f"{key[1]}:{key[2]}"} if key else {"column": column}
        tag = f"{key[0]}_{key[1]}_{key[2]}" if key else column
        x = np.asarray(values)
        if dist in ("lognormal", "both"):
            fits.append({"distribution": "lognormal", **_lognormal_row(x, **labels)})
        if dist in ("powerlaw", "both"):
            pl = statfit.fit_powerlaw(x)
            fits.append({"distribution": "powerlaw", **labels, **asdict(pl)})
        statfit.write_histogram_csv(statfit.histogram(x, bins=bins, log=log_bins),
                                    out.path(f"histogram_{tag}.csv"))
    out.json("fit.json", fits)


def cmd_spam_detect(cfg: RunConfig, out: Output) -> None:
    stream = _load(cfg.inputs)
    profiles = spamdetect.user_retweet_profiles(stream)
    statuses = _statuses(cfg)
    suspects = spamdetect.flag_suspects(profiles, statuses, _policy(cfg))
    out.csv("profiles.csv", ["user_id", "retweet_count", "distinct_targets", "ratio"],
            ((p.user_id, p.retweet_count, p.distinct_targets, repr(p.ratio))
             for p in profiles.values()))
    out.csv("suspects.csv", ["user_id", "reasons"], suspects.to_rows())
    if statuses is not None:
        rows = spamdetect.active_fraction_by_ratio(profiles, statuses)
        out.csv("status_bands.csv", ["band", "users", "active_pct", "inactive_pct"],
                ((r.band, r.n_users, "" if r.active_pct is None else repr(r.active_pct),
                  "" if r.inactive_pct is None else repr(r.inactive_pct)) for r in rows))
    out.json("detect.json", {"policy": suspects.policy, "users": len(profiles),
                             "suspects": len(suspects)})


def cmd_spam_remove(cfg: RunConfig, out: Output) -> None:
    stream = _load(cfg.inputs)
    suspects = _suspects(cfg, stream)
    cleaned, report = spamdetect.remove_spam(stream, suspects)
    ingest.write_jsonl(cleaned, out.path("events.jsonl"))
    out.json("removal.json", {"policy": suspects.policy, "suspects": len(suspects), **report.to_dict()})


def cmd_impact(cfg: RunConfig, out: Output) -> None:
    stream = _load(cfg.inputs)
    suspects = _suspects(cfg, stream)
    _, episodes, _ = _trend_starts(stream, cfg.k)
    report = spamdetect.trendsetter_impact(stream, suspects, [e.topic_key for e in episodes])
    out.json("impact.json", {"policy": suspects.policy, "suspects": len(suspects), **report.to_dict()})
    rows = spamdetect.rank_trendsetters(stream, episodes, cfg.extra["min_topics"])
    out.csv("trendsetters.csv", TRENDSETTER_HEADER, _trendsetter_rows(rows))


def _scenario(cfg: RunConfig) -> synth.SimulationScenario:
    return synth.load_scenario(cfg.scenario) if cfg.scenario else synth.SimulationScenario()


def cmd_simulate(cfg: RunConfig, out: Output) -> None:
    scenario = _scenario(cfg)
    corpus = synth.simulate(scenario, cfg.seed)
    ingest.write_jsonl(corpus.stream, out.path("events.jsonl"))
    synth.write_truth_csv(corpus, out.path("truth.csv"))
    out.csv("topic_starts.csv", ["topic", "start"], sorted(corpus.topic_starts.items()))
    out.json("scenario.json", {"seed": cfg.seed, **_scenario_echo(scenario),
                               "bots": len(corpus.bots), **corpus.stream.metadata.to_dict()})


def _scenario_echo(s: synth.SimulationScenario) -> dict:
    d = asdict(s)
    d["bot"] = dict(s.bot)
    return d


def _labeled_corpus(cfg: RunConfig) -> synth.LabeledCorpus:
    if cfg.inputs:
        truth_path = cfg.extra.get("truth")
        if not truth_path:
            raise TrendSpamError("evaluate with --input needs --truth")
        stream = _load(cfg.inputs)
        labels = synth.load_truth_csv(truth_path)
        bots = frozenset(u for u, lab in labels.items() if lab is synth.Label.BOT)
        return synth.LabeledCorpus(stream, bots)
    return synth.simulate(_scenario(cfg), cfg.seed)


def cmd_evaluate(cfg: RunConfig, out: Output) -> None:
    corpus = _labeled_corpus(cfg)
    profiles = spamdetect.user_retweet_profiles(corpus.stream)
    suspects = spamdetect.flag_suspects(profiles, _statuses(cfg), _policy(cfg))
    report = synth.evaluate_detection(corpus, suspects)
    out.csv("suspects.csv", ["user_id", "reasons"], suspects.to_rows())
    out.json("detection.json", {"policy": suspects.policy, "bots": len(corpus.bots),
                                "flagged": len(suspects), **report.to_dict()})


def cmd_report(cfg: RunConfig, out: Output) -> None:
    if cfg.inputs:
        stream, corpus = _load(cfg.inputs), None
    else:
        corpus = synth.simulate(_scenario(cfg), cfg.seed)
        stream = corpus.stream
    snaps, episodes, starts = _trend_starts(stream, cfg.k)
    trending.write_snapshots_csv(snaps, out.path("snapshots.csv"))
    trending.write_episodes_csv(episodes, out.path("episodes.csv"))

    samples, problems = _ratio_samples(stream, starts, cfg.frames, cfg.subsets, cfg.bucket, strict=False)
    _write_ratios(out, "ratios.csv", samples)

    profiles = spamdetect.user_retweet_profiles(stream)
    suspects = spamdetect.flag_suspects(profiles, _statuses(cfg), _policy(cfg))
    out.csv("suspects.csv", ["user_id", "reasons"], suspects.to_rows())
    report = {"metadata": stream.metadata.to_dict(), "trending_topics": len(starts),
              "fits": _fit_samples(samples, strict=False), "ratio_problems": problems,
              "policy": suspects.policy, "suspects": len(suspects)}
    if corpus is not None:
        report["detection"] = synth.evaluate_detection(corpus, suspects).to_dict()

    if len(suspects):
        cleaned, removal = spamdetect.remove_spam(stream, suspects)
        impact = spamdetect.trendsetter_impact(stream, suspects, list(starts))
        after, problems_after = _ratio_samples(cleaned, starts, cfg.frames, cfg.subsets, cfg.bucket,
                                               strict=False)
        _write_ratios(out, "ratios_cleaned.csv", after)
        report.update(removal=removal.to_dict(), impact=impact.to_dict(),
                      fits_cleaned=_fit_samples(after, strict=False),
                      ratio_problems_cleaned=problems_after)
    rows = spamdetect.rank_trendsetters(stream, episodes, cfg.extra["min_topics"])
    out.csv("trendsetters.csv", TRENDSETTER_HEADER, _trendsetter_rows(rows))
    out.json("report.json", report)


COMMANDS: dict[str, Callable[[RunConfig, Output], None]] = {
    "ingest": cmd_ingest,
    "trends": cmd_trends,
    "ratios": cmd_ratios,
    "fit": cmd_fit,
    "spam-detect": cmd_spam_detect,
    "spam-remove": cmd_spam_remove,
    "impact": cmd_impact,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trendspam",
                                     description="Trending-topic growth and retweet-spam analysis.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, help, inputs="required", bucket=None, k=False, frames=False, policy=False,
            scenario=False, seed=None):
        p = sub.add_parser(name, help=help)
        if inputs == "required":
            p.add_argument("--input", action="append", required=True, metavar="PATH",
                           help="event file (.jsonl or .csv); repeat to concatenate")
        elif inputs == "optional":
            p.add_argument("--input", action="append", default=[], metavar="PATH")
        p.add_argument("--out", required=True, metavar="DIR", help="output directory")
        if bucket is not None:
            p.add_argument("--bucket", type=_positive_int, default=bucket,
                           help=f"bucket width in seconds (default {bucket})")
        if k:
            p.add_argument("--k", type=_positive_int, default=50, help="trending list length (default 50)")
        if frames:
            p.add_argument("--frames", type=_frames, default=list(DEFAULT_FRAMES),
                           help="interval pairs i:j[,i:j...] (default 10:2,8:3)")
            p.add_argument("--subset", choices=[s.value for s in growth.Subset], action="append",
                           help="event subset; repeatable (default all)")
        if policy:
            p.add_argument("--ratio-threshold", type=_threshold, default=5.0,
                           help="flag users at or above this user-retweet ratio (default 5)")
            p.add_argument("--status-file", metavar="CSV", help="user_id,status table; flags deleted accounts")
            p.add_argument("--allowlist", metavar="FILE", help="user ids never flagged, one per line")
        if scenario:
            p.add_argument("--scenario", metavar="JSON", help="simulation scenario file")
        if seed is not None:
            p.add_argument("--seed", type=int, required=seed, help="master seed")
        return p

    p = add("ingest", "load, validate and normalize event files", bucket=0)
    add("trends", "hourly top-k snapshots and trend episodes", bucket=trending.HOUR, k=True)
    add("ratios", "cumulative-count ratio samples across trending topics",
        bucket=growth.INTERVAL, k=True, frames=True)
    p = add("fit", "fit log-normal / power-law to a sample column")
    p.add_argument("--column", default="ratio", help="numeric column to fit (default ratio)")
    p.add_argument("--dist", choices=["lognormal", "powerlaw", "both"], default="lognormal")
    p.add_argument("--bins", type=_positive_int, default=20)
    p.add_argument("--log-bins", action="store_true", help="logarithmic histogram bins")
    add("spam-detect", "user-retweet profiles and suspect accounts", policy=True)
    for name, help in (("spam-remove", "drop suspect activity and report what was removed"),
                       ("impact", "suspect reach and trend-setter ranking")):
        p = add(name, help, policy=True, k=name == "impact")
        p.add_argument("--suspects", metavar="CSV", help="suspect list (user_id column) instead of flagging")
        if name == "impact":
            p.add_argument("--min-topics", type=int, default=10)
    add("simulate", "generate a labelled synthetic corpus", inputs=None, scenario=True, seed=True)
    p = add("evaluate", "detection precision/recall against ground truth", inputs="optional",
            policy=True, scenario=True, seed=False)
    p.add_argument("--truth", metavar="CSV", help="user_id,label table for --input corpora")
    p = add("report", "full pipeline summary", inputs="optional", bucket=growth.INTERVAL, k=True,
            frames=True, policy=True, scenario=True, seed=False)
    p.add_argument("--min-topics", type=int, default=10)
    return parser


_CORE = {"command", "input", "out", "bucket", "k", "frames", "subset", "ratio_threshold",
         "status_file", "allowlist", "scenario", "seed", "verbose"}


def _config(args: argparse.Namespace) -> RunConfig:
    ns = vars(args)
    return RunConfig(
        command=args.command,
        inputs=list(ns.get("input") or []),
        out=args.out,
        bucket=ns.get("bucket"),
        k=ns.get("k", 50),
        frames=list(ns.get("frames") or []),
        subsets=list(ns.get("subset") or ([growth.Subset.ALL.value] if "subset" in ns else [])),
        ratio_threshold=ns.get("ratio_threshold", 5.0),
        status_file=ns.get("status_file"),
        allowlist=ns.get("allowlist"),
        scenario=ns.get("scenario"),
        seed=ns.get("seed"),
        extra={k: v for k, v in sorted(ns.items()) if k not in _CORE},
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    cfg = _config(args)
    if args.command in ("evaluate", "report") and not cfg.inputs and cfg.seed is None:
        parser.error(f"{args.command} without --input simulates a corpus and needs --seed")
    try:
        out = Output(Path(cfg.out), cfg)
        COMMANDS[cfg.command](cfg, out)
        out.finish()
    except (TrendSpamError, OSError, ValueError, LookupError, ArithmeticError) as exc:
        print(f"trendspam {cfg.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
