"""Streaming training loop, checkpoint ledger, and ensemble prediction.

Training walks the stream interval by interval with batch size one: each
submission triggers one forward pass and one Adam update.  Gradients are
truncated at interval boundaries; the hidden state carried into an interval
is a constant for that interval's gradients, while the interval's own
recurrent steps stay differentiable.  Because parameters change after every
update, the influence state a submission differentiates through is rebuilt
from the carried (constant) state with the parameters current at that step.

Carried hidden states reset to zero at every epoch start, and validation
runs a forward-only pass over its own stream that also starts from zero.
"""

from __future__ import annotations

import json
import logging
import math
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from chatternet.data import EncodedCorpus, Instance, IntervalView, group_by_interval
from chatternet.errors import ConfigurationError, DataError, NumericalError
from chatternet.model.checkpoint import load_checkpoint, save_checkpoint
from chatternet.model.config import InfluenceState
from chatternet.model.network import ChatterNet

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class TrainConfig:
    """Optimization protocol settings."""

    learning_rate: float = 1e-5
    epochs: int = 25
    batch_size: int = 1
    epsilon: float = 1e-7
    checkpoint_top_k: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.epsilon <= 0:
            raise ConfigurationError("epsilon must be positive")
        if self.batch_size != 1:
            raise ConfigurationError("training is online; batch_size must be 1")
        if self.epochs < 1 or self.checkpoint_top_k < 1:
            raise ConfigurationError("epochs and checkpoint_top_k must be >= 1")

    def to_dict(self) -> dict:
        return {"learning_rate": self.learning_rate, "epochs": self.epochs,
                "batch_size": self.batch_size, "epsilon": self.epsilon,
                "checkpoint_top_k": self.checkpoint_top_k, "seed": self.seed}


def relative_error_loss(y_true, y_pred, epsilon: float) -> torch.Tensor:
    """Mean absolute relative error, guarded against zero targets."""
    if epsilon <= 0:
        raise ConfigurationError("epsilon must be positive")
    t = torch.as_tensor(y_true, dtype=torch.float64) if not torch.is_tensor(y_true) else y_true
    p = torch.as_tensor(y_pred, dtype=torch.float64) if not torch.is_tensor(y_pred) else y_pred
    t = t.reshape(-1)
    p = p.reshape(-1)
    if t.numel() != p.numel():
        raise ConfigurationError(f"length mismatch: {t.numel()} targets vs {p.numel()} predictions")
    if t.numel() == 0:
        raise ConfigurationError("loss needs at least one sample")
    return (torch.abs(t - p) / (t + epsilon)).mean()


# ---------------------------------------------------------------------------
# Checkpoint ledger
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class CheckpointLedger:
    """Keeps the best checkpoints by validation loss, capacity-bounded."""

    capacity: int = 5
    entries: list[tuple[float, str]] = field(default_factory=list)

    def admits(self, val_loss: float) -> bool:
        if not math.isfinite(val_loss):
            raise NumericalError(f"validation loss is not finite: {val_loss}")
        return len(self.entries) < self.capacity or val_loss < self.entries[-1][0]

    def insert(self, val_loss: float, path: str) -> list[str]:
        """Insert an entry; returns paths evicted to stay within capacity."""
        if not self.admits(val_loss):
            return [path]
        self.entries.append((val_loss, path))
        self.entries.sort(key=lambda e: (e[0], e[1]))
        evicted = [p for _, p in self.entries[self.capacity:]]
        self.entries = self.entries[: self.capacity]
        return evicted

    def paths(self) -> list[str]:
        return [p for _, p in self.entries]

    def save(self, path) -> None:
        payload = [{"val_loss": loss, "path": p} for loss, p in self.entries]
        Path(path).write_text(json.dumps(payload, indent=2))

    @classmethod
    def load(cls, path, capacity: int = 5) -> "CheckpointLedger":
        entries = [(e["val_loss"], e["path"]) for e in json.loads(Path(path).read_text())]
        return cls(capacity=capacity, entries=entries)


# ---------------------------------------------------------------------------
# Forward-only streaming evaluation
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class PredictionRecord:
    submission_id: str
    subreddit: str
    timestamp: int
    target: float
    raw_count: int
    predicted: float
    potential: float
    scale: float
    base: float
    truncated: bool
    warmup: bool


def evaluate_stream(model: ChatterNet, view: IntervalView, instances: list[Instance],
                    warmup_intervals: int = 0) -> list[PredictionRecord]:
    """Forward-only replay over a time range, hidden states starting at zero.

    Predictions for submissions inside the first ``warmup_intervals``
    intervals are emitted with ``warmup=True`` so reports can exclude them.
    """
    model.eval()
    cfg = model.config
    dtype = cfg.torch_dtype
    groups = group_by_interval(instances)
    warm_end = view.k_start + warmup_intervals
    records: list[PredictionRecord] = []
    with torch.no_grad():
        state = model.initial_state(view.k_start - 1)
        for k in view.intervals():
            for inst in groups.get(k, ()):
                tokens = torch.from_numpy(view.corpus.sub_tokens[inst.corpus_row])
                outputs = model.predict_submission(
                    tokens,
                    torch.tensor(inst.subreddit_idx),
                    torch.tensor(inst.rate, dtype=dtype),
                    torch.from_numpy(inst.bins),
                    model.influence_vector(state) if cfg.uses_influence else None,
                )
                potential, scale, base, predicted = (float(o.item()) for o in outputs)
                records.append(PredictionRecord(
                    inst.submission_id, inst.subreddit, inst.timestamp,
                    inst.target, inst.raw_count, predicted, potential, scale, base,
                    inst.truncated, warmup=inst.interval < warm_end,
                ))
            if cfg.uses_influence:
                news = view.news_tokens(k) if cfg.needs_news_stream else None
                subs = view.submission_inputs(k) if cfg.needs_submission_stream else None
                if news is not None or subs is not None:
                    sub_tokens, sub_srs = subs if subs is not None else (None, None)
                    state = model.aggregate_interval(state, news, sub_tokens, sub_srs, k)
    return records


def validation_loss(model: ChatterNet, view: IntervalView, instances: list[Instance],
                    epsilon: float) -> float:
    records = evaluate_stream(model, view, instances)
    targets = torch.tensor([r.target for r in records], dtype=torch.float64)
    preds = torch.tensor([r.predicted for r in records], dtype=torch.float64)
    return float(relative_error_loss(targets, preds, epsilon).item())


def ensemble_predict(checkpoint_paths: list[str], corpus: EncodedCorpus, start: int,
                     end: int, instances: list[Instance],
                     warmup_intervals: int = 0) -> list[PredictionRecord]:
    """Average the per-model predicted chatter over several checkpoints."""
    if not checkpoint_paths:
        raise DataError("ensemble_predict needs at least one checkpoint")
    per_model: list[list[PredictionRecord]] = []
    for path in checkpoint_paths:
        model, _, _ = load_checkpoint(path)
        view = IntervalView(corpus, start, end, instances)
        per_model.append(evaluate_stream(model, view, instances, warmup_intervals))
    merged = []
    for rows in zip(*per_model):
        first = rows[0]
        merged.append(PredictionRecord(
            first.submission_id, first.subreddit, first.timestamp, first.target,
            first.raw_count,
            predicted=float(np.mean([r.predicted for r in rows])),
            potential=float(np.mean([r.potential for r in rows])),
            scale=float(np.mean([r.scale for r in rows])),
            base=float(np.mean([r.base for r in rows])),
            truncated=first.truncated, warmup=first.warmup,
        ))
    return merged


# ---------------------------------------------------------------------------
# Trainer
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    updates: int
    wall_time: float
    start_state_norm: float


class Trainer:
    """Runs the interval-ordered online protocol with top-k checkpointing."""

    def __init__(self, model: ChatterNet, corpus: EncodedCorpus,
                 train_range: tuple[int, int], val_range: tuple[int, int],
                 train_instances: list[Instance], val_instances: list[Instance],
                 config: TrainConfig, run_dir) -> None:
        self.model = model
        self.corpus = corpus
        self.config = config
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.train_view = IntervalView(corpus, *train_range, train_instances)
        self.val_view = IntervalView(corpus, *val_range, val_instances)
        self.train_instances = train_instances
        self.val_instances = val_instances
        self.optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate,
                                          betas=(0.9, 0.999), eps=1e-8)
        self.ledger = CheckpointLedger(capacity=config.checkpoint_top_k)
        self.history: list[EpochStats] = []
        self._last_state = model.initial_state(self.train_view.k_start - 1)

    # -- single epoch ---------------------------------------------------------

    def train_epoch(self, epoch: int) -> tuple[float, int, float]:
        model = self.model
        cfg = model.config
        dtype = cfg.torch_dtype
        view = self.train_view
        groups = group_by_interval(self.train_instances)
        model.train()

        state = model.initial_state(view.k_start - 1)  # stateful reset: zeros
        start_norm = float(state.combined().norm().item())
        pending_news: torch.Tensor | None = None
        pending_subs: tuple[torch.Tensor, torch.Tensor] | None = None
        pending_index = view.k_start - 1
        losses = []
        updates = 0
        for k in view.intervals():
            group = groups.get(k, ())
            carried: InfluenceState | None = None
            for inst in group:
                if cfg.uses_influence:
                    # Rebuild the previous interval's recurrent steps with the
                    # parameters of *this* update; the state carried into that
                    # interval stays constant (truncation boundary).
                    if pending_news is not None or pending_subs is not None:
                        sub_tokens, sub_srs = pending_subs if pending_subs else (None, None)
                        live = model.aggregate_interval(state, pending_news, sub_tokens,
                                                        sub_srs, pending_index)
                    else:
                        live = state
                    influence = model.influence_vector(live)
                    carried = live
                else:
                    influence = None
                tokens = torch.from_numpy(view.corpus.sub_tokens[inst.corpus_row])
                _, _, _, predicted = model.predict_submission(
                    tokens, torch.tensor(inst.subreddit_idx),
                    torch.tensor(inst.rate, dtype=dtype),
                    torch.from_numpy(inst.bins), influence,
                )
                loss = relative_error_loss(
                    torch.tensor(inst.target, dtype=dtype), predicted, self.config.epsilon)
                if not torch.isfinite(loss):
                    self._dump_diagnostics(epoch, k, inst, state)
                    raise NumericalError(
                        f"non-finite loss at epoch {epoch}, interval {k}, "
                        f"submission {inst.submission_id}"
                    )
                self.optimizer.zero_grad()
                loss.backward()
                self.optimizer.step()
                losses.append(float(loss.item()))
                updates += 1
            # Advance the carried state past interval k-1.
            if cfg.uses_influence:
                if carried is not None:
                    state = carried.detached()
                elif pending_news is not None or pending_subs is not None:
                    with torch.no_grad():
                        sub_tokens, sub_srs = pending_subs if pending_subs else (None, None)
                        state = model.aggregate_interval(state, pending_news, sub_tokens,
                                                         sub_srs, pending_index)
                pending_news = view.news_tokens(k) if cfg.needs_news_stream else None
                pending_subs = (view.submission_inputs(k)
                                if cfg.needs_submission_stream else None)
                pending_index = k
        if cfg.uses_influence and (pending_news is not None or pending_subs is not None):
            with torch.no_grad():
                sub_tokens, sub_srs = pending_subs if pending_subs else (None, None)
                state = model.aggregate_interval(state, pending_news, sub_tokens,
                                                 sub_srs, pending_index)
        self._last_state = state.detached()
        mean_loss = float(np.mean(losses)) if losses else float("nan")
        return mean_loss, updates, start_norm

    # -- full protocol ---------------------------------------------------------

    def train(self) -> list[EpochStats]:
        log_path = self.run_dir / "epochs.csv"
        if not log_path.exists():
            log_path.write_text("epoch,train_loss,val_loss,updates,wall_time\n")
        for epoch in range(1, self.config.epochs + 1):
            tic = time.perf_counter()
            train_loss, updates, start_norm = self.train_epoch(epoch)
            val_loss = validation_loss(self.model, self.val_view, self.val_instances,
                                       self.config.epsilon)
            wall = time.perf_counter() - tic
            stats = EpochStats(epoch, train_loss, val_loss, updates, wall, start_norm)
            self.history.append(stats)
            with open(log_path, "a", encoding="utf-8") as handle:
                handle.write(f"{epoch},{train_loss:.10f},{val_loss:.10f},{updates},{wall:.3f}\n")
            logger.info("epoch %d: train %.5f val %.5f (%d updates, %.1fs)",
                        epoch, train_loss, val_loss, updates, wall)
            self._checkpoint(epoch, val_loss)
            # Stateful reset happens implicitly: the next epoch's walk starts
            # from zeros (reset after validation, matching the protocol).
        self.ledger.save(self.run_dir / "ledger.json")
        return self.history

    def _checkpoint(self, epoch: int, val_loss: float) -> None:
        if not self.ledger.admits(val_loss):
            return
        path = self.run_dir / "checkpoints" / f"epoch_{epoch:03d}"
        save_checkpoint(path, self.model, self._last_state,
                        {"epoch": epoch, "val_loss": val_loss})
        for evicted in self.ledger.insert(val_loss, str(path)):
            if Path(evicted).exists():
                shutil.rmtree(evicted)
        self.ledger.save(self.run_dir / "ledger.json")

    def _dump_diagnostics(self, epoch: int, interval: int, inst: Instance,
                          state: InfluenceState) -> None:
        payload = {
            "epoch": epoch,
            "interval": interval,
            "submission_id": inst.submission_id,
            "state_norm": float(state.combined().norm().item()),
            "parameter_norms": {
                name: float(p.detach().norm().item())
                for name, p in self.model.named_parameters()
            },
        }
        (self.run_dir / "diagnostics.json").write_text(json.dumps(payload, indent=2))
