"""Dataset plumbing: the ingested store on disk, encoded corpora in memory,
and per-submission training/evaluation instances.

The store is three validated, time-sorted JSONL streams plus a stats
sidecar.  An EncodedCorpus holds every text as fixed-length token ids with
precomputed interval indices; an IntervalView walks a time range interval
by interval, exposing each interval's arrivals as tensors; instances carry
everything a single submission needs (tokens, subreddit, activity rate,
observation bins, target chatter).
"""

from __future__ import annotations

import json
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from chatternet import streams as sm
from chatternet.errors import ConfigurationError, DataError
from chatternet.textprep import TextConfig, Vocabulary, encode, normalize

STORE_FILES = {"news": "news.jsonl", "submission": "submissions.jsonl",
               "comment": "comments.jsonl"}


@dataclass(slots=True)
class Streams:
    news: list[sm.NewsItem]
    submissions: list[sm.SubmissionItem]
    comments: list[sm.CommentEvent]


def write_store(outdir, streams: Streams, delta_obs: int,
                skipped: dict | None = None) -> dict:
    """Write sorted streams plus the stats sidecar; returns the stats."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    news = sm.sort_stream(streams.news)
    subs = sm.sort_stream(streams.submissions)
    comments = sm.sort_stream(streams.comments)
    sm.write_jsonl(outdir / STORE_FILES["news"], news, "news")
    sm.write_jsonl(outdir / STORE_FILES["submission"], subs, "submission")
    sm.write_jsonl(outdir / STORE_FILES["comment"], comments, "comment")
    all_times = [r.timestamp for stream in (news, subs, comments) for r in stream]
    clock = sm.IntervalClock(origin=0, delta_obs=delta_obs)
    stats = {
        "counts": {"news": len(news), "submissions": len(subs), "comments": len(comments)},
        "skipped": skipped or {},
        "delta_obs": delta_obs,
        "origin": 0,
        "time_range": [min(all_times), max(all_times)] if all_times else None,
        "interval_range": (
            [clock.index_of(min(all_times)), clock.index_of(max(all_times))]
            if all_times else None
        ),
        "subreddits": sorted({s.subreddit for s in subs}),
    }
    (outdir / "stats.json").write_text(json.dumps(stats, indent=2))
    return stats


def load_store(directory) -> tuple[Streams, dict]:
    directory = Path(directory)
    stats_path = directory / "stats.json"
    if not stats_path.exists():
        raise DataError(f"{directory} is not an ingested store (missing stats.json)")
    stats = json.loads(stats_path.read_text())
    loaded = {}
    for kind, name in STORE_FILES.items():
        loaded[kind] = sm.ingest_jsonl(directory / name, kind).records
    return Streams(loaded["news"], loaded["submission"], loaded["comment"]), stats


# ---------------------------------------------------------------------------
# Encoded corpus
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class EncodedCorpus:
    clock: sm.IntervalClock
    subreddits: list[str]
    news_times: np.ndarray          # (N,), sorted
    news_tokens: np.ndarray         # (N, max_len_news) int64
    news_intervals: np.ndarray      # (N,)
    sub_times: np.ndarray           # (S,), sorted
    sub_ids: list[str]
    sub_tokens: np.ndarray          # (S, max_len_submission) int64
    sub_subreddits: np.ndarray      # (S,) int64 index into subreddits
    sub_intervals: np.ndarray       # (S,)
    comment_times_by_submission: dict[str, np.ndarray]
    activity: Counter               # (subreddit index, interval) -> comment count
    corpus_end: int                 # latest timestamp seen in any stream

    def subreddit_index(self, name: str) -> int:
        idx = bisect_left(self.subreddits, name)
        if idx == len(self.subreddits) or self.subreddits[idx] != name:
            raise DataError(f"subreddit {name!r} is not in the configured set")
        return idx

    def activity_rate(self, subreddit_idx: int, interval: int) -> float:
        """log1p comment count of the subreddit in the previous interval."""
        return float(np.log1p(self.activity.get((subreddit_idx, interval - 1), 0)))


def build_corpus(streams: Streams, vocab: Vocabulary, clock: sm.IntervalClock,
                 text_cfg: TextConfig, subreddits: list[str] | None = None) -> EncodedCorpus:
    news = sm.sort_stream(streams.news)
    subs = sm.sort_stream(streams.submissions)
    comments = sm.sort_stream(streams.comments)
    if subreddits is None:
        subreddits = sorted({s.subreddit for s in subs})
    sr_index = {name: i for i, name in enumerate(subreddits)}

    def encode_many(texts: list[str], max_len: int) -> np.ndarray:
        out = np.zeros((len(texts), max_len), dtype=np.int64)
        for i, text in enumerate(texts):
            out[i] = encode(normalize(text), vocab, max_len).ids
        return out

    news_times = np.array([n.timestamp for n in news], dtype=np.int64)
    sub_times = np.array([s.timestamp for s in subs], dtype=np.int64)
    unknown = [s.id for s in subs if s.subreddit not in sr_index]
    if unknown:
        raise DataError(
            f"{len(unknown)} submissions use subreddits outside the configured "
            f"set (first: {unknown[0]})"
        )
    by_submission: dict[str, list[int]] = {}
    activity: Counter = Counter()
    for c in comments:
        by_submission.setdefault(c.submission_id, []).append(c.timestamp)
        idx = sr_index.get(c.subreddit)
        if idx is not None:
            activity[(idx, clock.index_of(c.timestamp))] += 1
    times_all = [arr.max() for arr in (news_times, sub_times) if len(arr)]
    if comments:
        times_all.append(max(c.timestamp for c in comments))
    return EncodedCorpus(
        clock=clock,
        subreddits=list(subreddits),
        news_times=news_times,
        news_tokens=encode_many([f"{n.title} {n.body}" for n in news], text_cfg.max_len_news),
        news_intervals=np.array([clock.index_of(t) for t in news_times], dtype=np.int64),
        sub_times=sub_times,
        sub_ids=[s.id for s in subs],
        sub_tokens=encode_many([s.text_digest for s in subs], text_cfg.max_len_submission),
        sub_subreddits=np.array([sr_index[s.subreddit] for s in subs], dtype=np.int64),
        sub_intervals=np.array([clock.index_of(t) for t in sub_times], dtype=np.int64),
        comment_times_by_submission={k: np.array(sorted(v), dtype=np.int64)
                                     for k, v in by_submission.items()},
        activity=activity,
        corpus_end=max(times_all) if times_all else 0,
    )


def corpus_texts(streams: Streams) -> list[list[str]]:
    """Normalized token lists of every text (for vocabulary / embeddings)."""
    docs = [normalize(f"{n.title} {n.body}") for n in streams.news]
    docs.extend(normalize(s.text_digest) for s in streams.submissions)
    return docs


# ---------------------------------------------------------------------------
# Instances and interval walking
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class Instance:
    """Everything one submission contributes to training or evaluation."""

    submission_id: str
    timestamp: int
    interval: int                  # the interval the submission falls in
    corpus_row: int                # row into the corpus submission arrays
    subreddit: str
    subreddit_idx: int
    rate: float                    # log1p previous-interval subreddit activity
    bins: np.ndarray               # (m,) observed comment counts
    raw_count: int                 # prediction-window comment count
    target: float                  # log1p(raw_count)
    truncated: bool                # prediction window ran past the corpus end


def build_instances(corpus: EncodedCorpus, start: int, end: int, m: int,
                    delta_pred: int, truncate_at_corpus_end: bool = True) -> list[Instance]:
    """Instances for submissions posted in [start, end), in stream order."""
    if end <= start:
        raise ConfigurationError(f"empty instance range [{start}, {end})")
    lo = int(np.searchsorted(corpus.sub_times, start, side="left"))
    hi = int(np.searchsorted(corpus.sub_times, end, side="left"))
    delta_obs = corpus.clock.delta_obs
    corpus_end = corpus.corpus_end if truncate_at_corpus_end else None
    instances = []
    for row in range(lo, hi):
        sid = corpus.sub_ids[row]
        t = int(corpus.sub_times[row])
        k = int(corpus.sub_intervals[row])
        times = corpus.comment_times_by_submission.get(sid, ())
        bins = sm.bin_comments(t, times, m, delta_obs)
        target = sm.chatter_target(t, times, m, delta_obs, delta_pred, corpus_end)
        sr_idx = int(corpus.sub_subreddits[row])
        instances.append(Instance(
            submission_id=sid,
            timestamp=t,
            interval=k,
            corpus_row=row,
            subreddit=corpus.subreddits[sr_idx],
            subreddit_idx=sr_idx,
            rate=corpus.activity_rate(sr_idx, k),
            bins=np.array(bins.counts, dtype=np.int64),
            raw_count=target.raw_count,
            target=target.chatter,
            truncated=target.truncated,
        ))
    return instances


class IntervalView:
    """Interval-by-interval access to the arrivals of one time range.

    The walk covers every interval from the one containing ``start`` to the
    last interval holding an in-range arrival or instance.
    """

    def __init__(self, corpus: EncodedCorpus, start: int, end: int,
                 instances: list[Instance] | None = None):
        if end <= start:
            raise ConfigurationError(f"empty stream range [{start}, {end})")
        self.corpus = corpus
        clock = corpus.clock
        self._news_lo = int(np.searchsorted(corpus.news_times, start, side="left"))
        self._news_hi = int(np.searchsorted(corpus.news_times, end, side="left"))
        self._sub_lo = int(np.searchsorted(corpus.sub_times, start, side="left"))
        self._sub_hi = int(np.searchsorted(corpus.sub_times, end, side="left"))
        self.k_start = clock.index_of(start)
        last = [self.k_start]
        if self._news_hi > self._news_lo:
            last.append(int(corpus.news_intervals[self._news_hi - 1]))
        if self._sub_hi > self._sub_lo:
            last.append(int(corpus.sub_intervals[self._sub_hi - 1]))
        if instances:
            last.append(max(inst.interval for inst in instances))
        self.k_end = max(last)

    def intervals(self) -> range:
        return range(self.k_start, self.k_end + 1)

    def _slice(self, arr_intervals: np.ndarray, lo: int, hi: int, k: int) -> tuple[int, int]:
        window = arr_intervals[lo:hi]
        a = lo + int(np.searchsorted(window, k, side="left"))
        b = lo + int(np.searchsorted(window, k, side="right"))
        return a, b

    def news_tokens(self, k: int) -> torch.Tensor | None:
        a, b = self._slice(self.corpus.news_intervals, self._news_lo, self._news_hi, k)
        if a == b:
            return None
        return torch.from_numpy(self.corpus.news_tokens[a:b])

    def submission_inputs(self, k: int) -> tuple[torch.Tensor, torch.Tensor] | None:
        a, b = self._slice(self.corpus.sub_intervals, self._sub_lo, self._sub_hi, k)
        if a == b:
            return None
        return (torch.from_numpy(self.corpus.sub_tokens[a:b]),
                torch.from_numpy(self.corpus.sub_subreddits[a:b]))

    def has_arrivals(self, k: int) -> bool:
        na, nb = self._slice(self.corpus.news_intervals, self._news_lo, self._news_hi, k)
        sa, sb = self._slice(self.corpus.sub_intervals, self._sub_lo, self._sub_hi, k)
        return nb > na or sb > sa


def group_by_interval(instances: list[Instance]) -> dict[int, list[Instance]]:
    groups: dict[int, list[Instance]] = {}
    for inst in instances:
        groups.setdefault(inst.interval, []).append(inst)
    return groups
