import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chatternet import streams as sm
from chatternet.errors import ConfigurationError, DataError


def make_comment(i, t, sub="s0", sr="r"):
    return sm.CommentEvent(f"c{i}", t, sub, sr)


class TestIntervalClock:
    def test_boundary_belongs_to_closing_interval(self):
        clock = sm.IntervalClock(origin=0, delta_obs=60)
        assert clock.index_of(60) == 1
        assert clock.index_of(61) == 2
        assert clock.index_of(0) == 0

    def test_bounds_roundtrip(self):
        clock = sm.IntervalClock(origin=120, delta_obs=30)
        for t in (121, 150, 155, 180, 300):
            k = clock.index_of(t)
            lo, hi = clock.bounds(k)
            assert lo < t <= hi

    def test_rejects_nonpositive_delta(self):
        with pytest.raises(ConfigurationError):
            sm.IntervalClock(origin=0, delta_obs=0)


class TestPartitionIntervals:
    def test_example_grouping(self):
        clock = sm.IntervalClock(0, 60)
        events = [make_comment(i, t) for i, t in enumerate((10, 70, 125))]
        groups = sm.partition_intervals(events, clock)
        assert {k: [e.timestamp for e in v] for k, v in groups.items()} == {
            1: [10], 2: [70], 3: [125]}

    def test_event_at_origin_lands_in_interval_zero(self):
        clock = sm.IntervalClock(0, 60)
        groups = sm.partition_intervals([make_comment(0, 0)], clock)
        assert list(groups) == [0]

    def test_empty_stream(self):
        assert sm.partition_intervals([], sm.IntervalClock(0, 60)) == {}

    def test_negative_timestamp_dropped_with_diagnostic(self, caplog):
        clock = sm.IntervalClock(0, 60)
        with caplog.at_level("WARNING"):
            groups = sm.partition_intervals([make_comment(0, -5), make_comment(1, 5)], clock)
        assert sum(len(v) for v in groups.values()) == 1
        assert "negative timestamp" in caplog.text

    def test_unsorted_input_sorted_with_stable_tiebreak(self):
        clock = sm.IntervalClock(0, 60)
        events = [make_comment(2, 30), make_comment(1, 30), make_comment(0, 10)]
        groups = sm.partition_intervals(events, clock)
        assert [e.id for e in groups[1]] == ["c0", "c1", "c2"]

    @given(st.lists(st.integers(min_value=0, max_value=5000), max_size=60),
           st.integers(min_value=1, max_value=120))
    def test_partition_totality(self, times, delta):
        clock = sm.IntervalClock(0, delta)
        events = [make_comment(i, t) for i, t in enumerate(times)]
        groups = sm.partition_intervals(events, clock)
        assert sum(len(v) for v in groups.values()) == len(events)
        for k, members in groups.items():
            lo, hi = clock.bounds(k)
            for e in members:
                assert lo < e.timestamp <= hi


class TestBinComments:
    def test_counting_example(self):
        bins = sm.bin_comments(0, [10, 70, 110], m=2, delta_obs=60)
        assert bins.counts == (1, 2)

    def test_zero_shot_empty(self):
        assert sm.bin_comments(0, [5, 10], m=0, delta_obs=60).counts == ()

    def test_no_comments(self):
        assert sm.bin_comments(0, [], m=3, delta_obs=60).counts == (0, 0, 0)

    def test_boundary_comment_belongs_to_closing_bin(self):
        bins = sm.bin_comments(0, [60, 61], m=2, delta_obs=60)
        assert bins.counts == (1, 1)

    def test_comment_at_submission_time_excluded(self):
        assert sm.bin_comments(100, [100], m=1, delta_obs=60).counts == (0,)


class TestChatterTarget:
    def test_counting_and_log(self):
        target = sm.chatter_target(0, [5, 120, 2 * 86400], m=1, delta_obs=60,
                                   delta_pred=30 * 86400)
        assert target.raw_count == 2
        assert target.chatter == pytest.approx(math.log(3), abs=1e-12)

    def test_no_comments(self):
        target = sm.chatter_target(0, [], m=0, delta_obs=60, delta_pred=3600)
        assert target.raw_count == 0 and target.chatter == 0.0

    def test_hundred_comments(self):
        times = list(range(61, 161))
        target = sm.chatter_target(0, times, m=0, delta_obs=60, delta_pred=3600)
        assert target.raw_count == 100
        assert target.chatter == pytest.approx(math.log(101), abs=1e-12)

    def test_window_misconfiguration(self):
        with pytest.raises(ConfigurationError):
            sm.chatter_target(0, [], m=10, delta_obs=60, delta_pred=600)

    def test_truncation_flag(self):
        target = sm.chatter_target(0, [10, 20], m=0, delta_obs=60, delta_pred=3600,
                                   corpus_end=15)
        assert target.truncated and target.raw_count == 1

    @given(st.lists(st.integers(min_value=1, max_value=10_000), max_size=80),
           st.integers(min_value=100, max_value=5000),
           st.integers(min_value=5001, max_value=20_000))
    def test_monotone_in_delta_pred(self, times, pred_a, pred_b):
        a = sm.chatter_target(0, times, m=1, delta_obs=60, delta_pred=pred_a)
        b = sm.chatter_target(0, times, m=1, delta_obs=60, delta_pred=pred_b)
        assert b.raw_count >= a.raw_count

    @settings(max_examples=60)
    @given(st.lists(st.integers(min_value=-50, max_value=4000), max_size=100),
           st.sampled_from([0, 1, 2, 5]),
           st.integers(min_value=0, max_value=500))
    def test_bins_plus_target_partition_window(self, offsets, m, t0):
        """Observation bins and the prediction window split the comment set
        exactly; checked against a brute-force counting oracle."""
        delta_obs, delta_pred = 60, 1200
        times = [t0 + off for off in offsets]
        bins = sm.bin_comments(t0, times, m, delta_obs)
        target = sm.chatter_target(t0, times, m, delta_obs, delta_pred)
        oracle_window = sum(1 for t in times if t0 < t <= t0 + delta_pred)
        assert sum(bins.counts) + target.raw_count == oracle_window
        # brute-force per-bin check
        for l in range(1, m + 1):
            expected = sum(1 for t in times
                           if t0 + (l - 1) * delta_obs < t <= t0 + l * delta_obs)
            assert bins.counts[l - 1] == expected


class TestSubredditRate:
    def make_events(self):
        return [sm.CommentEvent(f"c{i}", t, "s", sr)
                for i, (t, sr) in enumerate([(10, "a"), (30, "a"), (70, "a"), (80, "b")])]

    def test_previous_interval_count(self):
        clock = sm.IntervalClock(0, 60)
        rate = sm.subreddit_rate("a", 2, self.make_events(), clock)
        assert rate.comment_count == 2
        assert rate.normalized_rate == pytest.approx(math.log(3), abs=1e-12)

    def test_seven_comments(self):
        clock = sm.IntervalClock(0, 60)
        events = [sm.CommentEvent(f"c{i}", 10 + i, "s", "x") for i in range(7)]
        rate = sm.subreddit_rate("x", 2, events, clock)
        assert rate.comment_count == 7
        assert rate.normalized_rate == pytest.approx(math.log(8), abs=1e-12)

    def test_cold_start(self):
        clock = sm.IntervalClock(0, 60)
        assert sm.subreddit_rate("a", 0, self.make_events(), clock).normalized_rate == 0.0

    def test_empty_previous_interval(self):
        clock = sm.IntervalClock(0, 60)
        rate = sm.subreddit_rate("b", 1, self.make_events(), clock)
        assert rate.comment_count == 0 and rate.normalized_rate == 0.0


class TestIngest:
    def write(self, path, lines):
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_valid_lines(self, tmp_path):
        lines = [json.dumps({"id": f"n{i}", "timestamp": 10 * i, "title": f"t {i}",
                             "body": "b", "source": "s"}) for i in range(3)]
        result = sm.ingest_jsonl(self.write(tmp_path / "n.jsonl", lines), "news")
        assert len(result.records) == 3 and result.skipped == 0

    def test_malformed_line_skipped(self, tmp_path):
        lines = [json.dumps({"id": "n0", "timestamp": 5, "title": "t", "body": "b",
                             "source": "s"}), "{not json"]
        result = sm.ingest_jsonl(self.write(tmp_path / "n.jsonl", lines), "news")
        assert len(result.records) == 1 and result.skipped == 1

    def test_missing_timestamp_skipped(self, tmp_path):
        lines = [json.dumps({"id": "c0", "submission_id": "s0", "subreddit": "r"}),
                 json.dumps({"id": "c1", "timestamp": 3, "submission_id": "s0",
                             "subreddit": "r"})]
        result = sm.ingest_jsonl(self.write(tmp_path / "c.jsonl", lines), "comment")
        assert result.skipped == 1 and result.reasons["missing field 'timestamp'"] == 1

    def test_mostly_malformed_is_hard_failure(self, tmp_path):
        lines = ["oops", "nope", json.dumps({"id": "c0", "timestamp": 1,
                                             "submission_id": "s", "subreddit": "r"})]
        with pytest.raises(DataError):
            sm.ingest_jsonl(self.write(tmp_path / "c.jsonl", lines), "comment")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(DataError):
            sm.ingest_jsonl(tmp_path / "missing.jsonl", "news")

    def test_submission_digest_concatenates_title_and_selftext(self, tmp_path):
        lines = [json.dumps({"id": "s0", "timestamp": 1, "subreddit": "r",
                             "title": "hello", "selftext": "world"})]
        result = sm.ingest_jsonl(self.write(tmp_path / "s.jsonl", lines), "submission")
        assert result.records[0].text_digest == "hello world"

    def test_comment_before_submission_dropped(self):
        subs = [sm.SubmissionItem("s0", 100, "r", "x")]
        comments = [sm.CommentEvent("c0", 50, "s0", "r"),
                    sm.CommentEvent("c1", 150, "s0", "r"),
                    sm.CommentEvent("c2", 10, "unknown", "r")]
        result = sm.link_comments(comments, subs)
        assert [c.id for c in result.records] == ["c1", "c2"]
        assert result.skipped == 1

    def test_jsonl_roundtrip(self, tmp_path):
        subs = [sm.SubmissionItem("s0", 5, "r", "hello world")]
        sm.write_jsonl(tmp_path / "s.jsonl", subs, "submission")
        back = sm.ingest_jsonl(tmp_path / "s.jsonl", "submission")
        assert back.records == subs


class TestDeterminism:
    def test_identical_inputs_identical_outputs(self):
        clock = sm.IntervalClock(0, 60)
        events = [make_comment(i, 7 * i) for i in range(20)]
        assert sm.partition_intervals(events, clock) == sm.partition_intervals(events, clock)
        assert sm.bin_comments(0, [e.timestamp for e in events], 3, 60) == \
            sm.bin_comments(0, [e.timestamp for e in events], 3, 60)
