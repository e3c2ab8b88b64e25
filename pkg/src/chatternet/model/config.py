"""Model architecture configuration and the small state/result records."""

from __future__ import annotations

from dataclasses import dataclass, asdict

import torch

from chatternet.errors import ConfigurationError

# full: both influence streams drive the calibrated convolutions.
# news_only / submission_only: the other stream's influence half is zeroed.
# static: calibration gains pinned to one, so the kernels never evolve.
# lstm_cc: observed comment counts alone, no text or influence path.
VARIANTS = ("full", "news_only", "submission_only", "static", "lstm_cc")


@dataclass(slots=True)
class ModelConfig:
    """All architecture hyperparameters and the ablation-variant switch."""

    vocab_size: int
    word_dim: int = 100
    max_len_submission: int = 50
    max_len_news: int = 100
    subreddit_count: int = 43
    subreddit_dim: int = 32
    branch_kernels: tuple[int, ...] = (1, 3, 5)
    branch_filters: tuple[int, ...] = (128, 64, 32)
    tec_tail_filters: tuple[int, ...] = (64, 32, 1)
    gru_hidden: int = 128
    lstm_hidden: int = 8
    leaky_alpha: float = 0.2
    m: int = 0
    variant: str = "full"
    epsilon: float = 1e-7
    dtype: str = "float64"
    strict_checks: bool = False
    # The one deliberate init exception: the final intensity conv starts with
    # a small positive bias so the ReLU above it has gradient from step one.
    # With the all-zero init, a cold influence state (zero gains, zero
    # kernels) or an unlucky draw pins the potential intensity at exactly 0
    # with zero gradient, and zero-shot training never starts.  Set to 0.0
    # for the strict all-zero-bias initialization.
    intensity_bias_init: float = 0.5

    def __post_init__(self) -> None:
        self.branch_kernels = tuple(self.branch_kernels)
        self.branch_filters = tuple(self.branch_filters)
        self.tec_tail_filters = tuple(self.tec_tail_filters)
        dims = (self.vocab_size, self.word_dim, self.max_len_submission,
                self.max_len_news, self.subreddit_count, self.subreddit_dim,
                self.gru_hidden, self.lstm_hidden,
                *self.branch_kernels, *self.branch_filters, *self.tec_tail_filters)
        if any(d <= 0 for d in dims):
            raise ConfigurationError("all model dimensions must be positive")
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown variant {self.variant!r}; pick one of {VARIANTS}")
        if self.m < 0:
            raise ConfigurationError("m (observation bins) must be nonnegative")
        if self.variant == "lstm_cc" and self.m == 0:
            raise ConfigurationError(
                "variant lstm_cc needs at least one observation bin (m >= 1); "
                "it has no zero-shot mode"
            )
        if len(self.branch_filters) != len(self.branch_kernels):
            raise ConfigurationError("branch_filters and branch_kernels must align")
        if self.tec_tail_filters[-1] != 1:
            raise ConfigurationError("the last tail conv must have exactly one filter")
        if self.leaky_alpha <= 0:
            raise ConfigurationError("leaky_alpha must be positive")
        if self.epsilon <= 0:
            raise ConfigurationError("epsilon must be positive")
        if self.dtype not in ("float32", "float64"):
            raise ConfigurationError("dtype must be float32 or float64")

    @property
    def feature_dim(self) -> int:
        """Width of a text feature vector: branches x last-stage filters."""
        return len(self.branch_kernels) * self.branch_filters[-1]

    @property
    def submission_feature_dim(self) -> int:
        return self.feature_dim + self.subreddit_dim

    @property
    def influence_dim(self) -> int:
        return 2 * self.gru_hidden

    @property
    def torch_dtype(self) -> torch.dtype:
        return torch.float64 if self.dtype == "float64" else torch.float32

    @property
    def uses_influence(self) -> bool:
        return self.variant in ("full", "news_only", "submission_only")

    # Masked influence halves are zero regardless of their stream, so the
    # corresponding GRU never needs to run for single-sided variants.
    @property
    def needs_news_stream(self) -> bool:
        return self.variant in ("full", "news_only")

    @property
    def needs_submission_stream(self) -> bool:
        return self.variant in ("full", "submission_only")

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("branch_kernels", "branch_filters", "tec_tail_filters"):
            out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        for key in ("branch_kernels", "branch_filters", "tec_tail_filters"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass(slots=True)
class InfluenceState:
    """Carried recurrent state at an interval boundary.

    ``index`` is the most recently consumed interval; the combined vector
    is the concatenation (news half, submission half).
    """

    news_hidden: torch.Tensor
    submission_hidden: torch.Tensor
    index: int

    def combined(self) -> torch.Tensor:
        return torch.cat([self.news_hidden, self.submission_hidden])

    def detached(self) -> "InfluenceState":
        return InfluenceState(self.news_hidden.detach(), self.submission_hidden.detach(), self.index)


@dataclass(frozen=True, slots=True)
class Prediction:
    """One submission's outputs along the intensity pipeline.

    base_intensity == activity_scale * potential_intensity, and with an
    empty observation window predicted_chatter equals base_intensity
    exactly.
    """

    potential_intensity: float
    activity_scale: float
    base_intensity: float
    predicted_chatter: float
