#!/usr/bin/env python3
"""Ablation experiment on a seeded synthetic corpus.

Generates streams, ingests them, trains the requested variants with a
shared budget, evaluates each on the held-out tail of the corpus, and
writes a comparison table.  Everything runs through the same CLI pipelines
a user would invoke by hand.

Example:
    python scripts/run_synthetic_experiment.py --out /tmp/chatter_exp \
        --variants full static --epochs 6
"""

import argparse
import json
import sys
import time
from pathlib import Path

from chatternet.cli import main as cli

DAY = 86400
T0 = 1_538_352_000
HORIZON = 4 * DAY

SYNTH = {
    "topic_count": 12,
    "vocab_per_topic": 12,
    "subreddit_count": 4,
    "horizon": HORIZON,
    "news_base_rate": 0.0002,
    "burst_rate": 0.01,
    "bursts_per_topic": 5,
    "burst_duration": 2700,
    "submission_rate": [0.0035, 0.0035, 0.0037, 0.0038],
    "beta_exo": 5.0,
    "beta_endo": 3.0,
    "base_mu": [1.0, 1.8, 2.8, 4.5],
    "half_life": 900,
    "comment_half_life": 10800,
    "seed": 2024,
}

TRAIN = {
    "model": {"word_dim": 24, "subreddit_dim": 8, "branch_filters": [16, 12, 8],
              "tec_tail_filters": [16, 8, 1], "gru_hidden": 24, "lstm_hidden": 8,
              "m": 0, "variant": "full"},
    "train": {"learning_rate": 1e-3, "epochs": 8, "epsilon": 0.1, "seed": 7},
    "text": {"max_len_submission": 10, "max_len_news": 26, "min_df": 5,
             "max_df": 0.8, "embed_dim": 24, "window": 3, "iterations": 2,
             "pretrain": True},
    "data": {"train_range": [T0, T0 + int(2.5 * DAY)],
             "val_range": [T0 + int(2.5 * DAY), T0 + 3 * DAY],
             "delta_pred": 2 * DAY},
}


def run(cmd: list[str]) -> None:
    code = cli(cmd)
    if code != 0:
        sys.exit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--variants", nargs="+",
                        default=["full", "news_only", "submission_only", "static"])
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--m", type=int, default=0)
    parser.add_argument("--seed", type=int)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "synth.json").write_text(json.dumps(SYNTH, indent=2))
    run(["synth", "--config", str(out / "synth.json"), "--out", str(out / "raw")])
    run(["ingest", "--news", str(out / "raw" / "news.jsonl"),
         "--subs", str(out / "raw" / "submissions.jsonl"),
         "--comments", str(out / "raw" / "comments.jsonl"),
         "--out", str(out / "store")])

    config = json.loads(json.dumps(TRAIN))
    if args.epochs:
        config["train"]["epochs"] = args.epochs
    if args.seed is not None:
        config["train"]["seed"] = args.seed
    config["model"]["m"] = args.m
    (out / "train.json").write_text(json.dumps(config, indent=2))

    eval_dirs = []
    for variant in args.variants:
        tic = time.perf_counter()
        run_dir = out / f"run_{variant}_m{args.m}"
        run(["train", "--config", str(out / "train.json"), "--data", str(out / "store"),
             "--out", str(run_dir), "--variant", variant])
        eval_dir = run_dir / "eval"
        run(["evaluate", "--run", str(run_dir), "--data", str(out / "store"),
             "--out", str(eval_dir), "--eval-start", str(T0 + 3 * DAY),
             "--eval-end", str(T0 + HORIZON)])
        eval_dirs.append(str(eval_dir))
        print(f"[{variant}] done in {time.perf_counter() - tic:.0f}s")

    run(["report", "--runs", *eval_dirs, "--out", str(out / "report"), "--plot"])
    print((out / "report" / "comparison.csv").read_text())


if __name__ == "__main__":
    main()
