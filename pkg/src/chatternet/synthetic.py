"""Seeded generator of coupled news / submission / comment streams.

Topics carry disjoint vocabularies.  News arrives per topic as a
piecewise-constant Poisson process (a low base rate plus scheduled bursts).
Submissions arrive per subreddit at constant rates; each picks a topic with
probability proportional to 1 + beta_exo * (decayed news mass on the topic)
+ beta_endo * (decayed submission mass on the topic), then receives a
Poisson comment count whose mean scales the subreddit's base volume by the
same influence expression, so both coupling knobs shape chatter.  Comment
timestamps decay exponentially after the submission.

All randomness flows from one counter-based generator (Philox), making
output byte-identical for a fixed seed across platforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from chatternet import streams as sm
from chatternet.errors import ConfigurationError

LN2 = math.log(2.0)


@dataclass(slots=True)
class SynthConfig:
    topic_count: int = 8
    vocab_per_topic: int = 20
    subreddit_count: int = 4
    horizon: int = 4 * 86400
    start_time: int = 1_538_352_000  # keeps timestamps in a realistic unix range
    news_base_rate: float = 0.0002   # per topic per second, off-burst
    burst_rate: float = 0.004        # additional rate inside a burst window
    bursts_per_topic: int = 5
    burst_duration: int = 1800
    submission_rate: tuple[float, ...] = (0.0035, 0.0035, 0.0037, 0.0038)
    beta_exo: float = 5.0            # news-mass coupling into topic choice and chatter
    beta_endo: float = 3.0           # submission-mass coupling into topic choice and chatter
    base_mu: tuple[float, ...] = (1.5, 2.5, 4.0, 6.0)
    half_life: int = 900             # topic-recency decay of the influence masses
    comment_half_life: int = 10800   # exponential decay of comment arrival delays
    news_title_words: int = 6
    news_body_words: int = 18
    submission_words: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        self.submission_rate = tuple(self.submission_rate)
        self.base_mu = tuple(self.base_mu)
        if self.topic_count <= 0 or self.vocab_per_topic <= 0 or self.subreddit_count <= 0:
            raise ConfigurationError("counts must be positive")
        if self.horizon <= 0:
            raise ConfigurationError("horizon must be positive")
        if len(self.submission_rate) != self.subreddit_count:
            raise ConfigurationError("submission_rate needs one entry per subreddit")
        if len(self.base_mu) != self.subreddit_count:
            raise ConfigurationError("base_mu needs one entry per subreddit")
        if min(self.base_mu) <= 0:
            raise ConfigurationError("base_mu entries must be positive")
        if self.beta_exo < 0 or self.beta_endo < 0:
            raise ConfigurationError("coupling strengths must be nonnegative")
        if min(self.news_base_rate, self.burst_rate) < 0 or min(self.submission_rate) < 0:
            raise ConfigurationError("rates must be nonnegative")
        if self.half_life <= 0 or self.comment_half_life <= 0:
            raise ConfigurationError("half-lives must be positive")

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["submission_rate"] = list(self.submission_rate)
        out["base_mu"] = list(self.base_mu)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        data = dict(data)
        for key in ("submission_rate", "base_mu"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass(slots=True)
class SynthStreams:
    news: list[sm.NewsItem]
    submissions: list[sm.SubmissionItem]
    comments: list[sm.CommentEvent]
    meta: dict


class _DecayedMass:
    """Per-topic exponentially decayed event counts."""

    def __init__(self, topic_count: int, half_life: float):
        self.values = np.zeros(topic_count)
        self.last_time = 0.0
        self.half_life = half_life

    def _decay_to(self, t: float) -> None:
        if t > self.last_time:
            self.values *= 2.0 ** (-(t - self.last_time) / self.half_life)
            self.last_time = t

    def bump(self, topic: int, t: float) -> None:
        self._decay_to(t)
        self.values[topic] += 1.0

    def snapshot(self, t: float) -> np.ndarray:
        self._decay_to(t)
        return self.values.copy()


def _merge_windows(windows: list[tuple[int, int]]) -> list[tuple[int, int]]:
    merged: list[tuple[int, int]] = []
    for start, end in sorted(windows):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def generate(config: SynthConfig) -> SynthStreams:
    """Deterministically generate the three coupled streams plus oracle metadata."""
    rng = np.random.Generator(np.random.Philox(config.seed))
    topics = list(range(config.topic_count))
    vocab = {t: [f"t{t:02d}w{w:02d}" for w in range(config.vocab_per_topic)] for t in topics}
    subreddits = [f"sr{i:02d}" for i in range(config.subreddit_count)]

    def words(topic: int, n: int) -> str:
        picks = rng.integers(0, config.vocab_per_topic, size=n)
        return " ".join(vocab[topic][w] for w in picks)

    # Burst schedule, then news arrivals from the piecewise-constant intensity.
    bursts: dict[int, list[tuple[int, int]]] = {}
    for t in topics:
        starts = rng.integers(0, max(1, config.horizon - config.burst_duration),
                              size=config.bursts_per_topic)
        bursts[t] = _merge_windows([(int(s), int(s) + config.burst_duration) for s in starts])

    raw_news: list[tuple[float, int]] = []  # (offset seconds, topic)
    for t in topics:
        boundaries = sorted({0, config.horizon}
                            | {b for w in bursts[t] for b in w if 0 <= b <= config.horizon})
        for lo, hi in zip(boundaries[:-1], boundaries[1:]):
            rate = config.news_base_rate
            if any(s <= lo < e for s, e in bursts[t]):
                rate += config.burst_rate
            count = rng.poisson(rate * (hi - lo))
            offsets = np.sort(rng.uniform(lo, hi, size=count))
            raw_news.extend((float(o), t) for o in offsets)
    raw_news.sort()

    # Submission arrival times per subreddit, merged in time order.
    raw_subs: list[tuple[float, int]] = []  # (offset, subreddit index)
    for i, rate in enumerate(config.submission_rate):
        count = rng.poisson(rate * config.horizon)
        offsets = np.sort(rng.uniform(0, config.horizon, size=count))
        raw_subs.extend((float(o), i) for o in offsets)
    raw_subs.sort()

    news_mass = _DecayedMass(config.topic_count, config.half_life)
    sub_mass = _DecayedMass(config.topic_count, config.half_life)

    news: list[sm.NewsItem] = []
    submissions: list[sm.SubmissionItem] = []
    comments: list[sm.CommentEvent] = []
    meta: dict = {
        "config": config.to_dict(),
        "burst_windows": {str(t): bursts[t] for t in topics},
        "news_topic": {},
        "submission_topic": {},
        "news_mass_at_post": {},
        "sub_mass_at_post": {},
        "expected_comments": {},
        "in_burst": {},
    }

    # Sweep news and submissions together; ties resolve news first so a
    # submission sees every article published up to its own second.
    events = [(o, 0, payload) for o, payload in raw_news]
    events += [(o, 1, payload) for o, payload in raw_subs]
    events.sort(key=lambda e: (e[0], e[1]))

    comment_scale = config.comment_half_life / LN2
    n_news = n_subs = n_comments = 0
    for offset, kind, payload in events:
        timestamp = config.start_time + int(offset)
        if kind == 0:
            topic = payload
            news_mass.bump(topic, offset)
            item_id = f"n{n_news:06d}"
            n_news += 1
            news.append(sm.NewsItem(item_id, timestamp,
                                    title=words(topic, config.news_title_words),
                                    body=words(topic, config.news_body_words),
                                    source=f"wire{topic:02d}"))
            meta["news_topic"][item_id] = topic
            continue
        sr = payload
        mn = news_mass.snapshot(offset)
        ms = sub_mass.snapshot(offset)
        weights = 1.0 + config.beta_exo * mn + config.beta_endo * ms
        topic = int(rng.choice(config.topic_count, p=weights / weights.sum()))
        mu = config.base_mu[sr] * (1.0 + config.beta_exo * mn[topic]
                                   + config.beta_endo * ms[topic])
        sub_mass.bump(topic, offset)
        sub_id = f"s{n_subs:06d}"
        n_subs += 1
        submissions.append(sm.SubmissionItem(sub_id, timestamp, subreddits[sr],
                                             words(topic, config.submission_words)))
        meta["submission_topic"][sub_id] = topic
        meta["news_mass_at_post"][sub_id] = float(mn[topic])
        meta["sub_mass_at_post"][sub_id] = float(ms[topic])
        meta["expected_comments"][sub_id] = float(mu)
        meta["in_burst"][sub_id] = any(s <= offset < e for s, e in bursts[topic])
        count = int(rng.poisson(mu))
        delays = rng.exponential(scale=comment_scale, size=count)
        for delay in delays:
            comments.append(sm.CommentEvent(f"c{n_comments:08d}",
                                            timestamp + int(round(delay)),
                                            sub_id, subreddits[sr]))
            n_comments += 1

    comments = sm.sort_stream(comments)
    return SynthStreams(news, submissions, comments, meta)


def describe(streams: SynthStreams) -> dict:
    """Deterministic summary statistics used by acceptance checks."""
    per_subreddit: dict[str, int] = {}
    for s in streams.submissions:
        per_subreddit[s.subreddit] = per_subreddit.get(s.subreddit, 0) + 1
    per_source: dict[str, int] = {}
    for n in streams.news:
        per_source[n.source] = per_source.get(n.source, 0) + 1
    counts_by_sub: dict[str, int] = {s.id: 0 for s in streams.submissions}
    for c in streams.comments:
        counts_by_sub[c.submission_id] = counts_by_sub.get(c.submission_id, 0) + 1
    per_submission = np.array(sorted(counts_by_sub.values()), dtype=np.int64)
    quantiles = (
        {f"q{q}": float(np.percentile(per_submission, q)) for q in (10, 50, 90, 99)}
        if len(per_submission) else {}
    )
    return {
        "news": len(streams.news),
        "submissions": len(streams.submissions),
        "comments": len(streams.comments),
        "submissions_per_subreddit": dict(sorted(per_subreddit.items())),
        "news_per_source": dict(sorted(per_source.items())),
        "comment_count_quantiles": quantiles,
    }


def write_streams(streams: SynthStreams, outdir) -> None:
    """Emit the interchange JSONL files plus the oracle metadata sidecar."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sm.write_jsonl(outdir / "news.jsonl", streams.news, "news")
    sm.write_jsonl(outdir / "submissions.jsonl", streams.submissions, "submission")
    sm.write_jsonl(outdir / "comments.jsonl", streams.comments, "comment")
    (outdir / "meta.json").write_text(json.dumps(streams.meta, indent=2, sort_keys=True))
