"""Checkpoint persistence.

A checkpoint is a directory holding the architecture manifest
(config.json), the parameter tensors (params.pt), the carried recurrent
state (state.pt), and the training record (record.json: epoch, validation
loss).  Writes go to a temporary sibling directory first and are renamed
into place, so a checkpoint directory is either complete or absent.
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from pathlib import Path

import torch

from chatternet.errors import DataError
from chatternet.model.config import InfluenceState, ModelConfig
from chatternet.model.network import ChatterNet


def save_checkpoint(path, model: ChatterNet, state: InfluenceState, record: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=path.name + ".tmp.", dir=path.parent))
    try:
        (tmp / "config.json").write_text(json.dumps(model.config.to_dict(), indent=2))
        torch.save(model.state_dict(), tmp / "params.pt")
        torch.save(
            {"news_hidden": state.news_hidden, "submission_hidden": state.submission_hidden,
             "index": state.index},
            tmp / "state.pt",
        )
        (tmp / "record.json").write_text(json.dumps(record, indent=2))
        if path.exists():
            shutil.rmtree(path)
        os.rename(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def load_checkpoint(path) -> tuple[ChatterNet, InfluenceState, dict]:
    path = Path(path)
    for name in ("config.json", "params.pt", "state.pt", "record.json"):
        if not (path / name).exists():
            raise DataError(f"{path} is not a complete checkpoint (missing {name})")
    config = ModelConfig.from_dict(json.loads((path / "config.json").read_text()))
    model = ChatterNet(config)
    model.load_state_dict(torch.load(path / "params.pt", weights_only=True))
    raw = torch.load(path / "state.pt", weights_only=True)
    state = InfluenceState(raw["news_hidden"], raw["submission_hidden"], raw["index"])
    record = json.loads((path / "record.json").read_text())
    return model, state, record
