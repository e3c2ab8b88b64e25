import numpy as np
import pytest
import torch

from chatternet.model import ModelConfig

torch.set_num_threads(1)


def tiny_model_config(**overrides) -> ModelConfig:
    """A fast micro-architecture used across the unit tests."""
    kwargs = dict(
        vocab_size=24,
        word_dim=6,
        max_len_submission=9,
        max_len_news=12,
        subreddit_count=3,
        subreddit_dim=4,
        branch_kernels=(1, 3, 5),
        branch_filters=(5, 4, 3),
        tec_tail_filters=(4, 3, 1),
        gru_hidden=5,
        lstm_hidden=3,
        m=0,
        variant="full",
        strict_checks=True,
    )
    kwargs.update(overrides)
    return ModelConfig(**kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def model_config():
    return tiny_model_config()
