#!/usr/bin/env python3
"""Observation- and prediction-window sweeps on an existing store.

Trains one model per observation-window size, then evaluates each trained
model across several prediction windows, mirroring the two sweep tables of
the evaluation protocol (m in {0, 15, 30, 45, 60} bins; prediction window
in {1, 10, 20, 30} days by default).

Example:
    python scripts/run_synthetic_experiment.py --out /tmp/exp --variants full
    python scripts/sweep_windows.py --data /tmp/exp/store --train-config \
        /tmp/exp/train.json --out /tmp/exp/sweeps --m 0 60 --delta-pred 1 2
"""

import argparse
import json
import sys
from pathlib import Path

from chatternet.cli import main as cli


def run(cmd: list[str]) -> None:
    code = cli(cmd)
    if code != 0:
        sys.exit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True, help="ingested store")
    parser.add_argument("--train-config", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--m", nargs="+", type=int, default=[0, 15, 30, 45, 60])
    parser.add_argument("--delta-pred", nargs="+", type=float,
                        default=[1, 10, 20, 30], help="days")
    parser.add_argument("--eval-start", type=int)
    parser.add_argument("--eval-end", type=int)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    eval_dirs = []
    for m in args.m:
        run_dir = out / f"run_m{m}"
        run(["train", "--config", args.train_config, "--data", args.data,
             "--out", str(run_dir), "--m", str(m)])
        for days in args.delta_pred:
            eval_dir = run_dir / f"eval_dp{days:g}"
            cmd = ["evaluate", "--run", str(run_dir), "--data", args.data,
                   "--out", str(eval_dir), "--delta-pred", str(days)]
            if args.eval_start is not None:
                cmd += ["--eval-start", str(args.eval_start),
                        "--eval-end", str(args.eval_end)]
            run(cmd)
            eval_dirs.append(str(eval_dir))

    run(["report", "--runs", *eval_dirs, "--out", str(out / "report")])
    print((out / "report" / "comparison.csv").read_text())


if __name__ == "__main__":
    main()
