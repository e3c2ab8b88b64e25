"""Shared setup for the synthetic-corpus acceptance runs (criteria 5-7).

One ~5k-submission corpus with strong, bursty exogenous coupling
(beta_exo=5) plus a real endogenous term; each variant trains with the same
seed and budget and is scored on the held-out final day with the top-5
checkpoint ensemble.  Workers rebuild the (deterministic) world from the
config, so runs can execute in separate processes.
"""

from __future__ import annotations

import tempfile
from types import SimpleNamespace

import torch

from chatternet import streams as sm
from chatternet import synthetic as syn
from chatternet.data import Streams, build_corpus, build_instances
from chatternet.evaluation import build_report
from chatternet.model import ModelConfig, build_model
from chatternet.textprep import TextConfig, build_vocab, encode, normalize, pretrain_embeddings
from chatternet.training import TrainConfig, Trainer, ensemble_predict

DAY = 86400

ACCEPT_SYNTH = dict(
    topic_count=8,
    vocab_per_topic=20,
    subreddit_count=4,
    horizon=4 * DAY,
    news_base_rate=0.0002,
    burst_rate=0.004,
    bursts_per_topic=5,
    burst_duration=1800,
    submission_rate=(0.0035, 0.0035, 0.0037, 0.0038),
    beta_exo=5.0,
    beta_endo=3.0,
    base_mu=(1.5, 2.5, 4.0, 6.0),
    half_life=900,
    comment_half_life=10800,
    seed=2024,
)

ACCEPT_TEXT = dict(
    max_len_submission=10,
    max_len_news=26,
    min_df=5,
    max_df=0.8,
    embed_dim=24,
    window=3,
    iterations=2,
    pretrain=True,
)

ACCEPT_MODEL = dict(
    word_dim=24,
    max_len_submission=10,
    max_len_news=26,
    subreddit_dim=8,
    branch_filters=(16, 12, 8),
    tec_tail_filters=(16, 8, 1),
    gru_hidden=24,
    lstm_hidden=8,
)

TRAIN_SPLIT = 2.5  # days; validation to day 3, test on the final day
VAL_SPLIT = 3.0
EPOCHS = 8
LEARNING_RATE = 1e-3
LOSS_EPSILON = 0.1
RUN_SEED = 7
DELTA_PRED = 2 * DAY
WARMUP_INTERVALS = 60
DELTA_OBS = 60


def build_accept_world(m: int = 0, synth_overrides: dict | None = None) -> SimpleNamespace:
    synth_cfg = syn.SynthConfig(**{**ACCEPT_SYNTH, **(synth_overrides or {})})
    generated = syn.generate(synth_cfg)
    streams = Streams(generated.news, generated.submissions, generated.comments)
    text_cfg = TextConfig(**ACCEPT_TEXT)
    t0 = synth_cfg.start_time
    train_range = (t0, t0 + int(TRAIN_SPLIT * DAY))
    val_range = (train_range[1], t0 + int(VAL_SPLIT * DAY))
    test_range = (val_range[1], t0 + synth_cfg.horizon)

    news_docs = [normalize(f"{n.title} {n.body}") for n in streams.news
                 if n.timestamp < train_range[1]]
    sub_docs = [normalize(s.text_digest) for s in streams.submissions
                if s.timestamp < train_range[1]]
    vocab = build_vocab(news_docs + sub_docs, max_df=text_cfg.max_df,
                        min_df=text_cfg.min_df)
    sentences = [list(encode(d, vocab, text_cfg.max_len_news).ids) for d in news_docs]
    sentences += [list(encode(d, vocab, text_cfg.max_len_submission).ids)
                  for d in sub_docs]
    embeddings = pretrain_embeddings(sentences, vocab.size, dim=text_cfg.embed_dim,
                                     window=text_cfg.window,
                                     iterations=text_cfg.iterations, seed=RUN_SEED)

    subreddits = sorted({s.subreddit for s in streams.submissions})
    clock = sm.IntervalClock(origin=0, delta_obs=DELTA_OBS)
    corpus = build_corpus(streams, vocab, clock, text_cfg, subreddits)
    return SimpleNamespace(
        synth_cfg=synth_cfg,
        meta=generated.meta,
        vocab=vocab,
        embeddings=embeddings,
        corpus=corpus,
        subreddits=subreddits,
        train_range=train_range,
        val_range=val_range,
        test_range=test_range,
        train_instances=build_instances(corpus, *train_range, m, DELTA_PRED),
        val_instances=build_instances(corpus, *val_range, m, DELTA_PRED),
        test_instances=build_instances(corpus, *test_range, m, DELTA_PRED),
    )


def run_variant(variant: str, m: int = 0, epochs: int = EPOCHS,
                seed: int = RUN_SEED, lr: float = LEARNING_RATE,
                synth_overrides: dict | None = None) -> dict:
    """Train one variant on the acceptance corpus and score the test day.

    Returns a plain dict (picklable across processes).
    """
    torch.set_num_threads(1)
    world = build_accept_world(m, synth_overrides)
    model_cfg = ModelConfig(vocab_size=world.vocab.size,
                            subreddit_count=len(world.subreddits),
                            m=m, variant=variant, **ACCEPT_MODEL)
    model = build_model(model_cfg, seed)
    model.set_word_embeddings(world.embeddings)
    train_cfg = TrainConfig(learning_rate=lr, epochs=epochs, epsilon=LOSS_EPSILON,
                            seed=seed)
    with tempfile.TemporaryDirectory() as run_dir:
        trainer = Trainer(model, world.corpus, world.train_range, world.val_range,
                          world.train_instances, world.val_instances, train_cfg,
                          run_dir)
        history = trainer.train()
        records = ensemble_predict(trainer.ledger.paths(), world.corpus,
                                   *world.test_range, world.test_instances,
                                   warmup_intervals=WARMUP_INTERVALS)
    report = build_report(records, epsilon=LOSS_EPSILON)
    return {
        "variant": variant,
        "m": m,
        "mape": report.mape,
        "kendall_tau": report.kendall_tau,
        "spearman_rho": report.spearman_rho,
        "stepwise_tau": report.stepwise_tau,
        "n": report.n,
        "val_losses": [h.val_loss for h in history],
        "train_losses": [h.train_loss for h in history],
        "wall_time": sum(h.wall_time for h in history),
    }
