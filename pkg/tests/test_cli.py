import csv
import json
import os
from pathlib import Path

import pytest

from chatternet.cli import main

T0 = 1_538_352_000
HORIZON = 4 * 3600

SYNTH_CONFIG = {
    "topic_count": 4,
    "vocab_per_topic": 8,
    "subreddit_count": 2,
    "horizon": HORIZON,
    "news_base_rate": 0.001,
    "burst_rate": 0.01,
    "bursts_per_topic": 2,
    "burst_duration": 1200,
    "submission_rate": [0.007, 0.007],
    "beta_exo": 5.0,
    "beta_endo": 2.0,
    "base_mu": [3.0, 5.0],
    "half_life": 900,
    "comment_half_life": 1800,
    "seed": 101,
}

TRAIN_CONFIG = {
    "model": {"word_dim": 12, "subreddit_dim": 4, "branch_filters": [8, 6, 4],
              "tec_tail_filters": [6, 4, 1], "gru_hidden": 8, "lstm_hidden": 4,
              "m": 0, "variant": "full"},
    "train": {"learning_rate": 1e-3, "epochs": 2, "epsilon": 0.1, "seed": 7},
    "text": {"max_len_submission": 10, "max_len_news": 26, "min_df": 5,
             "max_df": 0.8, "embed_dim": 12, "window": 4, "iterations": 2,
             "pretrain": True},
    "data": {"train_range": [T0, T0 + 9000], "val_range": [T0 + 9000, T0 + 11700],
             "delta_pred": 2 * 86400},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    synth_cfg = root / "synth.json"
    synth_cfg.write_text(json.dumps(SYNTH_CONFIG))
    raw = root / "raw"
    assert main(["synth", "--config", str(synth_cfg), "--out", str(raw)]) == 0

    store = root / "store"
    assert main(["ingest", "--news", str(raw / "news.jsonl"),
                 "--subs", str(raw / "submissions.jsonl"),
                 "--comments", str(raw / "comments.jsonl"),
                 "--out", str(store)]) == 0

    train_cfg = root / "train.json"
    train_cfg.write_text(json.dumps(TRAIN_CONFIG))
    run = root / "run"
    assert main(["train", "--config", str(train_cfg), "--data", str(store),
                 "--out", str(run)]) == 0

    eval_dir = root / "run" / "eval"
    assert main(["evaluate", "--run", str(run), "--data", str(store),
                 "--out", str(eval_dir), "--eval-start", str(T0 + 11700),
                 "--eval-end", str(T0 + HORIZON), "--warmup-intervals", "5",
                 "--per-subreddit"]) == 0
    return root


class TestSynthAndIngest:
    def test_store_stats_counts_match_raw_files(self, workspace):
        stats = json.loads((workspace / "store" / "stats.json").read_text())
        raw_lines = (workspace / "raw" / "submissions.jsonl").read_text().splitlines()
        assert stats["counts"]["submissions"] == len(raw_lines)
        assert stats["skipped"]["submissions"] == {}

    def test_store_is_sorted(self, workspace):
        times = []
        for line in (workspace / "store" / "comments.jsonl").read_text().splitlines():
            times.append(json.loads(line)["timestamp"])
        assert times == sorted(times)

    def test_missing_file_is_data_error(self, workspace, tmp_path):
        code = main(["ingest", "--news", str(tmp_path / "nope.jsonl"),
                     "--subs", str(tmp_path / "nope.jsonl"),
                     "--comments", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "out")])
        assert code == 3

    def test_synth_determinism(self, workspace, tmp_path):
        synth_cfg = workspace / "synth.json"
        out = tmp_path / "again"
        assert main(["synth", "--config", str(synth_cfg), "--out", str(out)]) == 0
        for name in ("news.jsonl", "submissions.jsonl", "comments.jsonl"):
            assert (out / name).read_bytes() == (workspace / "raw" / name).read_bytes()


class TestTrain:
    def test_run_artifacts_present(self, workspace):
        run = workspace / "run"
        for name in ("manifest.json", "run_config.json", "vocab.txt",
                     "embeddings.npy", "ledger.json", "epochs.csv"):
            assert (run / name).exists(), name
        ledger = json.loads((run / "ledger.json").read_text())
        assert 1 <= len(ledger) <= 5

    def test_manifest_written_with_fingerprints(self, workspace):
        manifest = json.loads((workspace / "run" / "manifest.json").read_text())
        assert manifest["command"] == "train"
        assert set(manifest["data_fingerprints"]) == {
            "news.jsonl", "submissions.jsonl", "comments.jsonl", "stats.json"}
        assert len(manifest["run_id"]) == 12

    def test_lstm_cc_zero_shot_rejected(self, workspace, tmp_path):
        cfg = dict(TRAIN_CONFIG)
        code = main(["train", "--config", str(workspace / "train.json"),
                     "--data", str(workspace / "store"),
                     "--out", str(tmp_path / "bad"),
                     "--variant", "lstm_cc", "--m", "0"])
        assert code == 2

    def test_static_zero_shot_supported(self, workspace, tmp_path):
        cfg = json.loads((workspace / "train.json").read_text())
        cfg["train"]["epochs"] = 1
        cfg_path = tmp_path / "static.json"
        cfg_path.write_text(json.dumps(cfg))
        code = main(["train", "--config", str(cfg_path),
                     "--data", str(workspace / "store"),
                     "--out", str(tmp_path / "static_run"),
                     "--variant", "static", "--m", "0"])
        assert code == 0

    def test_data_env_var_default(self, workspace, tmp_path, monkeypatch):
        monkeypatch.setenv("CHATTERNET_DATA_ROOT", str(workspace / "store"))
        cfg = json.loads((workspace / "train.json").read_text())
        cfg["train"]["epochs"] = 1
        cfg_path = tmp_path / "env.json"
        cfg_path.write_text(json.dumps(cfg))
        assert main(["train", "--config", str(cfg_path),
                     "--out", str(tmp_path / "env_run")]) == 0


class TestEvaluate:
    def test_metrics_csv_contains_all_four_metrics(self, workspace):
        with open(workspace / "run" / "eval" / "metrics.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        all_row = rows[0]
        assert all_row["subreddit"] == "ALL"
        for column in ("mape", "kendall_tau", "spearman_rho", "stepwise_tau"):
            float(all_row[column])  # parses as a number

    def test_per_subreddit_rows(self, workspace):
        with open(workspace / "run" / "eval" / "metrics.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert [r["subreddit"] for r in rows] == ["ALL", "sr00", "sr01"]

    def test_delta_pred_flag_accepted(self, workspace, tmp_path):
        for days in ("1", "30"):
            out = tmp_path / f"eval_{days}"
            code = main(["evaluate", "--run", str(workspace / "run"),
                         "--data", str(workspace / "store"), "--out", str(out),
                         "--delta-pred", days, "--eval-start", str(T0 + 11700),
                         "--eval-end", str(T0 + HORIZON),
                         "--warmup-intervals", "5"])
            assert code == 0
            with open(out / "metrics.csv", newline="") as handle:
                row = list(csv.DictReader(handle))[0]
            assert float(row["delta_pred_days"]) == float(days)

    def test_evaluate_twice_identical_csv(self, workspace, tmp_path):
        args = ["evaluate", "--run", str(workspace / "run"),
                "--data", str(workspace / "store"),
                "--eval-start", str(T0 + 11700), "--eval-end", str(T0 + HORIZON),
                "--warmup-intervals", "5"]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        assert (out_a / "metrics.csv").read_bytes() == (out_b / "metrics.csv").read_bytes()
        assert (out_a / "predictions.csv").read_bytes() == \
            (out_b / "predictions.csv").read_bytes()

    def test_rerun_from_manifest_byte_identical(self, workspace, tmp_path):
        manifest = workspace / "run" / "eval" / "eval_manifest.json"
        out = tmp_path / "replay"
        code = main(["evaluate", "--run", str(workspace / "run"),
                     "--data", str(workspace / "store"),
                     "--from-manifest", str(manifest), "--out", str(out)])
        assert code == 0
        assert (out / "metrics.csv").read_bytes() == \
            (workspace / "run" / "eval" / "metrics.csv").read_bytes()

    def test_missing_checkpoints_is_data_error(self, workspace, tmp_path):
        empty_run = tmp_path / "empty_run"
        empty_run.mkdir()
        code = main(["evaluate", "--run", str(empty_run),
                     "--data", str(workspace / "store"), "--out", str(tmp_path / "x")])
        assert code == 3


class TestReport:
    def test_report_aggregates_runs(self, workspace, tmp_path):
        out = tmp_path / "report"
        code = main(["report", "--runs", str(workspace / "run" / "eval"),
                     "--out", str(out)])
        assert code == 0
        with open(out / "comparison.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert {r["variant"] for r in rows} == {"full"}

    def test_report_with_zero_runs_nonzero_exit(self, tmp_path):
        empty = tmp_path / "nothing"
        empty.mkdir()
        assert main(["report", "--runs", str(empty), "--out", str(tmp_path / "o")]) == 3


class TestTrainRerun:
    def test_train_from_manifest_reproduces_ledger(self, workspace, tmp_path):
        manifest = workspace / "run" / "manifest.json"
        out = tmp_path / "rerun"
        code = main(["train", "--from-manifest", str(manifest),
                     "--data", str(workspace / "store"), "--out", str(out)])
        assert code == 0
        original = json.loads((workspace / "run" / "ledger.json").read_text())
        rerun = json.loads((out / "ledger.json").read_text())
        assert [e["val_loss"] for e in original] == [e["val_loss"] for e in rerun]

    def test_fingerprint_mismatch_detected(self, workspace, tmp_path):
        manifest = workspace / "run" / "manifest.json"
        altered = tmp_path / "altered_store"
        altered.mkdir()
        for name in ("news.jsonl", "submissions.jsonl", "comments.jsonl", "stats.json"):
            (altered / name).write_bytes((workspace / "store" / name).read_bytes())
        with open(altered / "comments.jsonl", "a") as handle:
            handle.write(json.dumps({"id": "cx", "timestamp": T0, "submission_id": "s0",
                                     "subreddit": "sr00"}) + "\n")
        code = main(["train", "--from-manifest", str(manifest),
                     "--data", str(altered), "--out", str(tmp_path / "bad")])
        assert code == 3
