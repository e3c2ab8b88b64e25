"""Command-line entry point.

Subcommands: ingest, train, evaluate, synth, report.  Exit codes: 0 on
success, 2 for usage/configuration errors, 3 for data errors, 4 for
numerical failures.  The CHATTERNET_DATA_ROOT environment variable supplies
a default for --data.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from chatternet.errors import ConfigurationError, DataError, NumericalError
from chatternet.runs import load_manifest, verify_fingerprints

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _data_default() -> str | None:
    return os.environ.get("CHATTERNET_DATA_ROOT")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chatternet",
                                     description="chatter-intensity prediction pipelines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate, sort, and index raw JSONL streams")
    p.add_argument("--news", required=True)
    p.add_argument("--subs", required=True)
    p.add_argument("--comments", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--delta-obs", type=int, default=60)

    p = sub.add_parser("train", help="run the streaming training protocol")
    p.add_argument("--config", help="JSON config file (sections: model/train/text/data)")
    p.add_argument("--data", default=_data_default(), help="ingested store directory")
    p.add_argument("--out", required=True, help="run directory to create")
    p.add_argument("--variant", help="full|news_only|submission_only|static|lstm_cc")
    p.add_argument("--m", type=int, help="observation bins")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--from-manifest", help="reproduce a run from its manifest")

    p = sub.add_parser("evaluate", help="score a completed run")
    p.add_argument("--run", help="run directory (required unless --from-manifest)")
    p.add_argument("--data", default=_data_default())
    p.add_argument("--out", help="output directory (default RUN/eval)")
    p.add_argument("--delta-pred", type=float, help="prediction window in days")
    p.add_argument("--per-subreddit", action="store_true")
    p.add_argument("--eval-start", type=int)
    p.add_argument("--eval-end", type=int)
    p.add_argument("--warmup-intervals", type=int, default=60)
    p.add_argument("--best-only", action="store_true",
                   help="use the single best checkpoint instead of the top-5 ensemble")
    p.add_argument("--plot", action="store_true")
    p.add_argument("--from-manifest", help="reproduce an evaluation from its manifest")

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--config", help="JSON file of generator settings")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("report", help="aggregate evaluations into comparison tables")
    p.add_argument("--runs", nargs="+", required=True, help="evaluation output directories")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true")
    return parser


def _cmd_ingest(args) -> int:
    from chatternet.pipeline import run_ingest

    stats = run_ingest(args.news, args.subs, args.comments, args.out, args.delta_obs)
    print(json.dumps(stats["counts"]))
    return EXIT_OK


def _cmd_train(args) -> int:
    from chatternet.pipeline import resolve_config, run_training

    if not args.data:
        raise ConfigurationError("--data is required (or set CHATTERNET_DATA_ROOT)")
    if args.from_manifest:
        manifest = load_manifest(args.from_manifest)
        if manifest.get("command") != "train":
            raise ConfigurationError(f"{args.from_manifest} is not a train manifest")
        verify_fingerprints(manifest, args.data)
        config = manifest["config"]
    else:
        overrides: dict = {}
        if args.variant is not None:
            overrides.setdefault("model", {})["variant"] = args.variant
        if args.m is not None:
            overrides.setdefault("model", {})["m"] = args.m
        if args.seed is not None:
            overrides.setdefault("train", {})["seed"] = args.seed
        if args.epochs is not None:
            overrides.setdefault("train", {})["epochs"] = args.epochs
        config = resolve_config(args.config, overrides)
    manifest = run_training(args.data, args.out, config)
    print(f"run {manifest['run_id']} complete: {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    from chatternet.pipeline import run_evaluation

    if not args.data:
        raise ConfigurationError("--data is required (or set CHATTERNET_DATA_ROOT)")
    if args.from_manifest:
        manifest = load_manifest(args.from_manifest)
        if manifest.get("command") != "evaluate":
            raise ConfigurationError(f"{args.from_manifest} is not an evaluate manifest")
        params = manifest["config"]
        run_dir = args.run
        if run_dir is None:
            raise ConfigurationError("--run is required with --from-manifest")
        out = args.out or os.path.join(run_dir, "eval")
        eval_range = tuple(params["eval_range"])
        manifest = run_evaluation(run_dir, args.data, out,
                                  delta_pred_days=params["delta_pred_days"],
                                  per_subreddit=params["per_subreddit"],
                                  eval_range=eval_range,
                                  warmup_intervals=params["warmup_intervals"],
                                  use_ensemble=params["ensemble"], plot=args.plot)
    else:
        if not args.run:
            raise ConfigurationError("--run is required")
        out = args.out or os.path.join(args.run, "eval")
        eval_range = None
        if (args.eval_start is None) != (args.eval_end is None):
            raise ConfigurationError("--eval-start and --eval-end must be given together")
        if args.eval_start is not None:
            eval_range = (args.eval_start, args.eval_end)
        manifest = run_evaluation(args.run, args.data, out,
                                  delta_pred_days=args.delta_pred,
                                  per_subreddit=args.per_subreddit,
                                  eval_range=eval_range,
                                  warmup_intervals=args.warmup_intervals,
                                  use_ensemble=not args.best_only, plot=args.plot)
    print(f"evaluation written: {out}/metrics.csv")
    return EXIT_OK


def _cmd_synth(args) -> int:
    from chatternet.pipeline import run_synth

    summary = run_synth(args.config, args.out, args.seed)
    print(json.dumps({k: summary[k] for k in ("news", "submissions", "comments")}))
    return EXIT_OK


def _cmd_report(args) -> int:
    from chatternet.pipeline import run_report

    out_path = run_report(args.runs, args.out, args.plot)
    print(f"comparison written: {out_path}")
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "synth": _cmd_synth,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("CHATTERNET_LOGLEVEL", "INFO"),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
