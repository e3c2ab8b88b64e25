"""End-to-end pipelines behind the CLI subcommands.

Each pipeline is an importable function so tests and experiment scripts can
drive runs in-process; the CLI only parses arguments and maps exceptions to
exit codes.
"""

from __future__ import annotations

import copy
import json
import logging
from pathlib import Path

import torch

from chatternet import streams as sm
from chatternet.data import (
    Streams,
    build_corpus,
    build_instances,
    load_store,
    write_store,
)
from chatternet.errors import ConfigurationError, DataError
from chatternet.evaluation import (
    build_report,
    plot_error_scatter,
    write_metrics_csv,
    write_predictions_csv,
)
from chatternet.model import ModelConfig, build_model
from chatternet.runs import fingerprint_dir, write_manifest
from chatternet.textprep import (
    TextConfig,
    build_vocab,
    encode,
    load_vocab,
    normalize,
    pretrain_embeddings,
    save_embeddings,
    save_vocab,
)
from chatternet.training import (
    CheckpointLedger,
    TrainConfig,
    Trainer,
    ensemble_predict,
)

logger = logging.getLogger(__name__)

STORE_FINGERPRINT_FILES = ["news.jsonl", "submissions.jsonl", "comments.jsonl", "stats.json"]

DEFAULT_DELTA_PRED = 30 * 86400


def default_config() -> dict:
    return {
        "model": {
            "word_dim": 100,
            "max_len_submission": 50,
            "max_len_news": 100,
            "subreddit_dim": 32,
            "branch_kernels": [1, 3, 5],
            "branch_filters": [128, 64, 32],
            "tec_tail_filters": [64, 32, 1],
            "gru_hidden": 128,
            "lstm_hidden": 8,
            "leaky_alpha": 0.2,
            "m": 0,
            "variant": "full",
            "epsilon": 1e-7,
            "dtype": "float64",
        },
        "train": {
            "learning_rate": 1e-5,
            "epochs": 25,
            "batch_size": 1,
            "epsilon": 1e-7,
            "checkpoint_top_k": 5,
            "seed": 0,
        },
        "text": {
            "max_len_submission": 50,
            "max_len_news": 100,
            "min_df": 5,
            "max_df": 0.8,
            "embed_dim": 100,
            "window": 10,
            "iterations": 500,
            "pretrain": True,
        },
        "data": {
            "train_range": None,
            "val_range": None,
            "delta_pred": DEFAULT_DELTA_PRED,
        },
    }


def merge_config(base: dict, override: dict | None) -> dict:
    merged = copy.deepcopy(base)
    for section, values in (override or {}).items():
        if section not in merged:
            raise ConfigurationError(f"unknown config section {section!r}")
        if not isinstance(values, dict):
            raise ConfigurationError(f"config section {section!r} must be an object")
        for key, value in values.items():
            if key not in merged[section] and section != "data":
                raise ConfigurationError(f"unknown config key {section}.{key}")
            merged[section][key] = value
    return merged


def resolve_config(config_file: str | None = None, overrides: dict | None = None) -> dict:
    """defaults <- config file <- explicit overrides (flags win)."""
    merged = default_config()
    if config_file:
        try:
            file_cfg = json.loads(Path(config_file).read_text())
        except OSError as exc:
            raise DataError(f"cannot read config {config_file}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {config_file} is not valid JSON: {exc}") from exc
        merged = merge_config(merged, file_cfg)
    return merge_config(merged, overrides)


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def run_ingest(news_path, subs_path, comments_path, out_dir, delta_obs: int = 60) -> dict:
    news = sm.ingest_jsonl(news_path, "news")
    subs = sm.ingest_jsonl(subs_path, "submission")
    comments = sm.ingest_jsonl(comments_path, "comment")
    linked = sm.link_comments(comments.records, subs.records)
    skipped = {
        "news": dict(news.reasons),
        "submissions": dict(subs.reasons),
        "comments": dict(comments.reasons) | dict(linked.reasons),
    }
    streams = Streams(news.records, subs.records, linked.records)
    stats = write_store(out_dir, streams, delta_obs, skipped)
    logger.info("ingested %s", json.dumps(stats["counts"]))
    return stats


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _filter_range(streams: Streams, start: int, end: int) -> Streams:
    return Streams(
        [n for n in streams.news if start <= n.timestamp < end],
        [s for s in streams.submissions if start <= s.timestamp < end],
        [c for c in streams.comments if start <= c.timestamp < end],
    )


def run_training(data_dir, out_dir, config: dict) -> dict:
    """Full training pipeline; returns the run manifest."""
    torch.set_num_threads(1)
    out_dir = Path(out_dir)
    streams, stats = load_store(data_dir)
    data_cfg = config["data"]
    if not data_cfg.get("train_range") or not data_cfg.get("val_range"):
        raise ConfigurationError("config data.train_range and data.val_range are required")
    train_range = tuple(int(t) for t in data_cfg["train_range"])
    val_range = tuple(int(t) for t in data_cfg["val_range"])
    delta_pred = int(data_cfg.get("delta_pred", DEFAULT_DELTA_PRED))
    text_cfg = TextConfig(**config["text"])
    train_cfg = TrainConfig(**config["train"])
    subreddits = stats["subreddits"]
    if not subreddits:
        raise DataError("store contains no submissions")
    model_kwargs = dict(config["model"])
    model_kwargs["max_len_submission"] = text_cfg.max_len_submission
    model_kwargs["max_len_news"] = text_cfg.max_len_news
    if text_cfg.pretrain and model_kwargs.get("word_dim") != text_cfg.embed_dim:
        raise ConfigurationError(
            "model.word_dim must equal text.embed_dim when pretraining embeddings"
        )

    fingerprints = fingerprint_dir(data_dir, STORE_FINGERPRINT_FILES)
    manifest = write_manifest(out_dir / "manifest.json", "train", config, fingerprints,
                              train_cfg.seed)

    # Vocabulary and embeddings come from the training split only.
    train_streams = _filter_range(streams, *train_range)
    news_docs = [normalize(f"{n.title} {n.body}") for n in train_streams.news]
    sub_docs = [normalize(s.text_digest) for s in train_streams.submissions]
    vocab = build_vocab(news_docs + sub_docs, max_df=text_cfg.max_df, min_df=text_cfg.min_df)
    save_vocab(out_dir / "vocab.txt", vocab)

    model_config = ModelConfig(vocab_size=vocab.size, subreddit_count=len(subreddits),
                               **model_kwargs)
    model = build_model(model_config, train_cfg.seed)
    if text_cfg.pretrain:
        sentences = [list(encode(doc, vocab, text_cfg.max_len_news).ids) for doc in news_docs]
        sentences += [list(encode(doc, vocab, text_cfg.max_len_submission).ids)
                      for doc in sub_docs]
        matrix = pretrain_embeddings(sentences, vocab.size, dim=text_cfg.embed_dim,
                                     window=text_cfg.window, iterations=text_cfg.iterations,
                                     seed=train_cfg.seed)
        save_embeddings(out_dir / "embeddings.npy", matrix)
        model.set_word_embeddings(matrix)

    resolved = {
        "run_id": manifest["run_id"],
        "model": model_config.to_dict(),
        "train": train_cfg.to_dict(),
        "text": config["text"],
        "data": {"train_range": list(train_range), "val_range": list(val_range),
                 "delta_pred": delta_pred},
        "subreddits": subreddits,
        "delta_obs": stats["delta_obs"],
        "origin": stats.get("origin", 0),
    }
    (out_dir / "run_config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True))

    clock = sm.IntervalClock(origin=stats.get("origin", 0), delta_obs=stats["delta_obs"])
    corpus = build_corpus(streams, vocab, clock, text_cfg, subreddits)
    train_instances = build_instances(corpus, *train_range, model_config.m, delta_pred)
    val_instances = build_instances(corpus, *val_range, model_config.m, delta_pred)
    if not train_instances or not val_instances:
        raise DataError("training or validation range contains no submissions")
    trainer = Trainer(model, corpus, train_range, val_range, train_instances,
                      val_instances, train_cfg, out_dir)
    trainer.train()
    return manifest


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def run_evaluation(run_dir, data_dir, out_dir, delta_pred_days: float | None = None,
                   per_subreddit: bool = False, eval_range: tuple[int, int] | None = None,
                   warmup_intervals: int = 60, use_ensemble: bool = True,
                   plot: bool = False) -> dict:
    """Score a completed run; returns the evaluation manifest."""
    torch.set_num_threads(1)
    run_dir = Path(run_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run_config_path = run_dir / "run_config.json"
    if not run_config_path.exists():
        raise DataError(f"{run_dir} is not a completed run (missing run_config.json)")
    run_config = json.loads(run_config_path.read_text())
    ledger_path = run_dir / "ledger.json"
    if not ledger_path.exists():
        raise DataError(f"{run_dir} has no checkpoint ledger; train first")
    ledger = CheckpointLedger.load(ledger_path)
    if not ledger.entries:
        raise DataError(f"{run_dir} has an empty checkpoint ledger")
    paths = ledger.paths() if use_ensemble else ledger.paths()[:1]

    streams, stats = load_store(data_dir)
    if stats["delta_obs"] != run_config["delta_obs"]:
        raise ConfigurationError(
            f"store delta_obs {stats['delta_obs']} differs from the run's "
            f"{run_config['delta_obs']}"
        )
    vocab = load_vocab(run_dir / "vocab.txt")
    text_cfg = TextConfig(**run_config["text"])
    clock = sm.IntervalClock(origin=run_config.get("origin", 0),
                             delta_obs=run_config["delta_obs"])
    corpus = build_corpus(streams, vocab, clock, text_cfg, run_config["subreddits"])

    model_cfg = run_config["model"]
    delta_pred = (int(delta_pred_days * 86400) if delta_pred_days is not None
                  else int(run_config["data"]["delta_pred"]))
    if eval_range is None:
        lo, hi = stats["time_range"]
        eval_range = (int(lo), int(hi) + 1)
    instances = build_instances(corpus, eval_range[0], eval_range[1], model_cfg["m"],
                                delta_pred)
    if not instances:
        raise DataError("evaluation range contains no submissions")
    records = ensemble_predict(paths, corpus, eval_range[0], eval_range[1], instances,
                               warmup_intervals)
    epsilon = run_config["train"]["epsilon"]
    report = build_report(records, epsilon=epsilon, per_subreddit=per_subreddit)

    eval_params = {
        "train_run_id": run_config["run_id"],
        "delta_pred_days": delta_pred / 86400.0,
        "per_subreddit": per_subreddit,
        "eval_range": list(eval_range),
        "warmup_intervals": warmup_intervals,
        "ensemble": use_ensemble,
        "checkpoints": [str(p) for p in paths],
    }
    fingerprints = fingerprint_dir(data_dir, STORE_FINGERPRINT_FILES)
    fingerprints["ledger.json"] = fingerprint_dir(run_dir, ["ledger.json"])["ledger.json"]
    manifest_path = out_dir / "eval_manifest.json"
    if manifest_path.exists():
        manifest_path.unlink()
    manifest = write_manifest(manifest_path, "evaluate", eval_params, fingerprints,
                              run_config["train"]["seed"])

    write_metrics_csv(out_dir / "metrics.csv", run_config["run_id"],
                      model_cfg["variant"], model_cfg["m"], delta_pred / 86400.0, report)
    write_predictions_csv(out_dir / "predictions.csv", records)
    if plot:
        plot_error_scatter(records, out_dir / "scatter.png")
    return manifest


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def run_report(eval_dirs: list, out_dir, plot: bool = False) -> Path:
    """Aggregate several evaluations into one comparison table."""
    import csv

    rows = []
    header = None
    for directory in eval_dirs:
        metrics = Path(directory) / "metrics.csv"
        if not metrics.exists():
            raise DataError(f"{directory} has no metrics.csv")
        with open(metrics, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader)
            rows.extend(list(reader))
    if not rows:
        raise DataError("no evaluation rows found to report on")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows.sort(key=lambda r: (r[1], int(r[2]), float(r[3]), r[4], r[0]))
    out_path = out_dir / "comparison.csv"
    with open(out_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    if plot:
        for directory in eval_dirs:
            predictions = Path(directory) / "predictions.csv"
            if predictions.exists():
                _scatter_from_csv(predictions, out_dir / f"scatter_{Path(directory).name}.png")
    return out_path


def _scatter_from_csv(predictions_csv, out_path) -> None:
    import csv

    from chatternet.training import PredictionRecord

    records = []
    with open(predictions_csv, "r", encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            records.append(PredictionRecord(
                row["submission_id"], row["subreddit"], int(row["timestamp"]),
                float(row["target"]), int(row["raw_count"]), float(row["predicted"]),
                float(row["potential"]), float(row["scale"]), float(row["base"]),
                bool(int(row["truncated"])), bool(int(row["warmup"])),
            ))
    plot_error_scatter(records, out_path)


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def run_synth(config_file: str | None, out_dir, seed: int | None = None) -> dict:
    from chatternet.synthetic import SynthConfig, describe, generate, write_streams

    cfg_dict = {}
    if config_file:
        cfg_dict = json.loads(Path(config_file).read_text())
    if seed is not None:
        cfg_dict["seed"] = seed
    config = SynthConfig.from_dict(cfg_dict)
    streams = generate(config)
    write_streams(streams, out_dir)
    summary = describe(streams)
    (Path(out_dir) / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary
