"""Canonical data model for the news / submission / comment streams.

Time is quantized into fixed-length intervals; interval ``k`` covers the
half-open range ``(origin + (k-1)*delta, origin + k*delta]`` so that every
event lands in exactly one interval and an event stamped exactly on a
boundary belongs to the interval that ends there.

All operations here are pure functions over immutable records and are safe
to call concurrently.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from chatternet.errors import ConfigurationError, DataError

logger = logging.getLogger(__name__)

DEFAULT_DELTA_OBS = 60
DEFAULT_DELTA_PRED = 30 * 24 * 3600  # 30 days


# ---------------------------------------------------------------------------
# Record types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class NewsItem:
    """One externally published article."""

    id: str
    timestamp: int
    title: str
    body: str
    source: str


@dataclass(frozen=True, slots=True)
class SubmissionItem:
    """One root post opening a discussion; text_digest is title + selftext."""

    id: str
    timestamp: int
    subreddit: str
    text_digest: str


@dataclass(frozen=True, slots=True)
class CommentEvent:
    """One comment attached (directly or transitively) to a submission."""

    id: str
    timestamp: int
    submission_id: str
    subreddit: str


@dataclass(frozen=True, slots=True)
class IntervalClock:
    """Quantizes unix-second timestamps into half-open intervals.

    Interval ``k`` covers ``(origin + (k-1)*delta_obs, origin + k*delta_obs]``.
    """

    origin: int = 0
    delta_obs: int = DEFAULT_DELTA_OBS

    def __post_init__(self) -> None:
        if self.delta_obs <= 0:
            raise ConfigurationError(f"delta_obs must be positive, got {self.delta_obs}")

    def index_of(self, timestamp: int) -> int:
        """Interval index containing ``timestamp`` (boundary belongs to the
        interval it closes)."""
        return -((self.origin - timestamp) // self.delta_obs)

    def bounds(self, k: int) -> tuple[int, int]:
        """(exclusive start, inclusive end) of interval ``k``."""
        end = self.origin + k * self.delta_obs
        return end - self.delta_obs, end


@dataclass(frozen=True, slots=True)
class ObservationBins:
    """Per-interval comment counts observed right after a submission."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.counts):
            raise ValueError("observation bin counts must be nonnegative")

    @property
    def m(self) -> int:
        return len(self.counts)


@dataclass(frozen=True, slots=True)
class ChatterTarget:
    """Ground-truth chatter: log1p of the prediction-window comment count."""

    raw_count: int
    chatter: float
    delta_pred: int
    truncated: bool = False  # prediction window extends past the corpus end

    def __post_init__(self) -> None:
        if self.raw_count < 0:
            raise ValueError("raw_count must be nonnegative")


@dataclass(frozen=True, slots=True)
class SubredditActivity:
    """Comment volume of one subreddit in the interval before ``interval_index``."""

    subreddit: str
    interval_index: int
    comment_count: int
    normalized_rate: float


# ---------------------------------------------------------------------------
# Quantization and counting
# ---------------------------------------------------------------------------

def partition_intervals(events: Sequence, clock: IntervalClock) -> dict[int, list]:
    """Group timestamped events by interval index.

    Events are sorted by (timestamp, id) first, so out-of-order input is
    accepted; records with negative timestamps are dropped with a diagnostic.
    """
    ordered = sorted(events, key=lambda e: (e.timestamp, e.id))
    groups: dict[int, list] = defaultdict(list)
    for event in ordered:
        if event.timestamp < 0:
            logger.warning("dropping event %s: negative timestamp %d", event.id, event.timestamp)
            continue
        groups[clock.index_of(event.timestamp)].append(event)
    return dict(groups)


def bin_comments(
    submission_time: int,
    comment_times: Iterable[int],
    m: int,
    delta_obs: int = DEFAULT_DELTA_OBS,
) -> ObservationBins:
    """Count comments in the ``m`` half-open intervals following a submission.

    Bin ``l`` (1-based) covers ``(t + (l-1)*delta, t + l*delta]``; comments
    outside the observation window are ignored.  ``m == 0`` yields empty bins.
    """
    if m < 0:
        raise ConfigurationError(f"m must be nonnegative, got {m}")
    counts = [0] * m
    if m:
        window_end = submission_time + m * delta_obs
        for t in comment_times:
            if submission_time < t <= window_end:
                counts[(t - submission_time - 1) // delta_obs] += 1
    return ObservationBins(tuple(counts))


def chatter_target(
    submission_time: int,
    comment_times: Iterable[int],
    m: int,
    delta_obs: int = DEFAULT_DELTA_OBS,
    delta_pred: int = DEFAULT_DELTA_PRED,
    corpus_end: int | None = None,
) -> ChatterTarget:
    """Ground-truth chatter over the prediction window.

    Counts comments in ``(t + m*delta_obs, t + delta_pred]`` and returns the
    log1p-transformed count.  When ``corpus_end`` is given and the prediction
    window extends past it, the count is truncated there and the target is
    flagged.
    """
    if m < 0:
        raise ConfigurationError(f"m must be nonnegative, got {m}")
    if m * delta_obs >= delta_pred:
        raise ConfigurationError(
            f"observation window ({m}*{delta_obs}s) must end before the "
            f"prediction window does ({delta_pred}s)"
        )
    window_start = submission_time + m * delta_obs
    window_end = submission_time + delta_pred
    truncated = False
    if corpus_end is not None and window_end > corpus_end:
        window_end = corpus_end
        truncated = True
    count = sum(1 for t in comment_times if window_start < t <= window_end)
    return ChatterTarget(count, math.log1p(count), delta_pred, truncated)


def subreddit_rate(
    subreddit: str,
    interval_index: int,
    comments: Sequence[CommentEvent],
    clock: IntervalClock,
) -> SubredditActivity:
    """Activity of ``subreddit`` in the interval preceding ``interval_index``.

    The rate is the raw comment count of the single previous interval,
    log1p-normalized.  ``interval_index == 0`` is a cold start and yields 0.
    """
    count = 0
    if interval_index >= 1:
        lo, hi = clock.bounds(interval_index - 1)
        count = sum(
            1 for c in comments if c.subreddit == subreddit and lo < c.timestamp <= hi
        )
    return SubredditActivity(subreddit, interval_index, count, math.log1p(count))


# ---------------------------------------------------------------------------
# JSONL ingestion
# ---------------------------------------------------------------------------

JSONL_SCHEMAS = {
    "news": ("id", "timestamp", "title", "body", "source"),
    "submission": ("id", "timestamp", "subreddit", "title", "selftext"),
    "comment": ("id", "timestamp", "submission_id", "subreddit"),
}


@dataclass(slots=True)
class IngestResult:
    """Validated records plus per-reason skip diagnostics."""

    records: list
    skipped: int = 0
    reasons: Counter = field(default_factory=Counter)


def _has_content(text: str) -> bool:
    # Nonempty after normalization: our tokenizer keeps alphanumeric runs,
    # so any alphanumeric character guarantees at least one token.
    return any(ch.isalnum() for ch in text)


def _parse_record(obj: dict, kind: str):
    for key in JSONL_SCHEMAS[kind]:
        if key not in obj:
            return None, f"missing field {key!r}"
    ts = obj["timestamp"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        return None, "timestamp not an integer"
    if ts < 0:
        return None, "negative timestamp"
    if kind == "news":
        if not isinstance(obj["title"], str) or not _has_content(obj["title"]):
            return None, "empty title"
        return NewsItem(str(obj["id"]), ts, obj["title"], str(obj["body"]), str(obj["source"])), None
    if kind == "submission":
        digest = f"{obj['title']} {obj['selftext']}".strip()
        return SubmissionItem(str(obj["id"]), ts, str(obj["subreddit"]), digest), None
    return CommentEvent(str(obj["id"]), ts, str(obj["submission_id"]), str(obj["subreddit"])), None


def ingest_jsonl(path, kind: str) -> IngestResult:
    """Read one-JSON-object-per-line records of the given kind.

    Malformed lines are skipped and counted; more than 50% malformed lines
    (on a nonempty file) is treated as a broken input and raises DataError.
    """
    if kind not in JSONL_SCHEMAS:
        raise ConfigurationError(f"unknown stream kind {kind!r}")
    result = IngestResult(records=[])
    total = 0
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            total += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                result.skipped += 1
                result.reasons["invalid json"] += 1
                logger.warning("%s:%d: invalid json, line skipped", path, lineno)
                continue
            record, reason = _parse_record(obj, kind)
            if record is None:
                result.skipped += 1
                result.reasons[reason] += 1
                logger.warning("%s:%d: %s, line skipped", path, lineno, reason)
                continue
            result.records.append(record)
    if total and result.skipped * 2 > total:
        raise DataError(
            f"{path}: {result.skipped}/{total} lines malformed, refusing to continue"
        )
    return result


def link_comments(
    comments: Sequence[CommentEvent], submissions: Sequence[SubmissionItem]
) -> IngestResult:
    """Drop comments stamped before their linked submission (clock skew).

    Comments referencing submissions outside the corpus are kept: they still
    witness subreddit activity even though no target uses them.
    """
    posted_at = {s.id: s.timestamp for s in submissions}
    result = IngestResult(records=[])
    for c in comments:
        t0 = posted_at.get(c.submission_id)
        if t0 is not None and c.timestamp < t0:
            result.skipped += 1
            result.reasons["comment before submission"] += 1
            logger.warning(
                "dropping comment %s: timestamp %d precedes submission %s (%d)",
                c.id, c.timestamp, c.submission_id, t0,
            )
            continue
        result.records.append(c)
    return result


def sort_stream(records: Sequence) -> list:
    """Time order with a stable id tiebreak."""
    return sorted(records, key=lambda r: (r.timestamp, r.id))


def write_jsonl(path, records: Iterable, kind: str) -> int:
    """Write records in the interchange schema; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8") as handle:
        for r in records:
            if kind == "news":
                obj = {"id": r.id, "timestamp": r.timestamp, "title": r.title,
                       "body": r.body, "source": r.source}
            elif kind == "submission":
                # text_digest round-trips through the title field; selftext
                # stays empty so title+selftext re-concatenates to the digest.
                obj = {"id": r.id, "timestamp": r.timestamp, "subreddit": r.subreddit,
                       "title": r.text_digest, "selftext": ""}
            elif kind == "comment":
                obj = {"id": r.id, "timestamp": r.timestamp,
                       "submission_id": r.submission_id, "subreddit": r.subreddit}
            else:
                raise ConfigurationError(f"unknown stream kind {kind!r}")
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")
            n += 1
    return n
