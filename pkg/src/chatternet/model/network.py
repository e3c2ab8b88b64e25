"""The chatter-prediction network and its streaming state handling.

Forward flow for one submission posted in interval k+1:

1. texts arriving in interval k (news, submissions) pass a shared static
   conv block; two stateful GRUs aggregate each stream's features into the
   interval's influence halves;
2. the submission's text passes the calibrated conv block whose kernels are
   gain-modulated by the combined influence state and the subreddit
   embedding, producing a nonnegative potential intensity;
3. a sigmoid feed-forward of the subreddit's recent commenting rate scales
   the potential into the base intensity;
4. with a nonempty observation window, log1p-binned comment counts run
   through a small LSTM whose final hidden state is fused with the base
   intensity to produce the predicted chatter; with an empty window the
   prediction is the base intensity itself.

Ablation variants mask one or both influence halves, pin the calibration
gains to one, or bypass the text path entirely (counts-only).
"""

from __future__ import annotations

import torch
from torch import nn

from chatternet.errors import ConfigurationError, NumericalError
from chatternet.model.blocks import (
    ActivityScaler,
    CalibratedConvBlock,
    ObservationHead,
    StaticConvBlock,
    init_rnn_,
)
from chatternet.model.config import InfluenceState, ModelConfig


class ChatterNet(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.embedding = nn.Embedding(config.vocab_size, config.word_dim, padding_idx=0)
        nn.init.xavier_uniform_(self.embedding.weight)
        with torch.no_grad():
            self.embedding.weight[0].zero_()
        self.subreddit_embedding = nn.Embedding(config.subreddit_count, config.subreddit_dim)
        nn.init.xavier_uniform_(self.subreddit_embedding.weight)
        self.static_block = StaticConvBlock(config.word_dim, config.branch_kernels,
                                            config.branch_filters)
        self.news_gru = nn.GRU(config.feature_dim, config.gru_hidden)
        self.submission_gru = nn.GRU(config.submission_feature_dim, config.gru_hidden)
        init_rnn_(self.news_gru)
        init_rnn_(self.submission_gru)
        self.tec = CalibratedConvBlock(config.word_dim, config.branch_kernels,
                                       config.branch_filters, config.tec_tail_filters,
                                       config.influence_dim, config.subreddit_dim,
                                       config.leaky_alpha, config.intensity_bias_init)
        self.scaler = ActivityScaler()
        self.obs_head = ObservationHead(config.lstm_hidden)
        self.to(config.torch_dtype)

    # --- text feature extraction -------------------------------------------

    def _embed(self, tokens: torch.Tensor, expected_len: int) -> torch.Tensor:
        if tokens.shape[-1] != expected_len:
            raise ConfigurationError(
                f"token sequence length {tokens.shape[-1]} does not match the "
                f"configured length {expected_len}"
            )
        return self.embedding(tokens)

    def news_features(self, tokens: torch.Tensor) -> torch.Tensor:
        """(N, max_len_news) token ids -> (N, feature_dim)."""
        return self.static_block(self._embed(tokens, self.config.max_len_news))

    def submission_features(self, tokens: torch.Tensor, subreddits: torch.Tensor) -> torch.Tensor:
        """(S, max_len_submission) ids + (S,) subreddit ids -> (S, feature_dim + subreddit_dim)."""
        text = self.static_block(self._embed(tokens, self.config.max_len_submission))
        return torch.cat([text, self.subreddit_embedding(subreddits)], dim=1)

    # --- influence aggregation ----------------------------------------------

    def initial_state(self, before_index: int) -> InfluenceState:
        zeros = torch.zeros(self.config.gru_hidden, dtype=self.config.torch_dtype)
        return InfluenceState(zeros, zeros.clone(), before_index)

    def aggregate_interval(
        self,
        state: InfluenceState,
        news_tokens: torch.Tensor | None,
        sub_tokens: torch.Tensor | None,
        sub_subreddits: torch.Tensor | None,
        index: int,
    ) -> InfluenceState:
        """Consume one interval's arrivals and return the updated state.

        An empty stream leaves the corresponding hidden state unchanged.
        Item order inside an interval must already be the arrival order.
        """
        h_news = state.news_hidden
        if news_tokens is not None and len(news_tokens):
            feats = self.news_features(news_tokens).unsqueeze(1)  # (N, 1, F)
            _, h = self.news_gru(feats, h_news.reshape(1, 1, -1))
            h_news = h.reshape(-1)
        h_sub = state.submission_hidden
        if sub_tokens is not None and len(sub_tokens):
            feats = self.submission_features(sub_tokens, sub_subreddits).unsqueeze(1)
            _, h = self.submission_gru(feats, h_sub.reshape(1, 1, -1))
            h_sub = h.reshape(-1)
        return InfluenceState(h_news, h_sub, index)

    def influence_vector(self, state: InfluenceState) -> torch.Tensor:
        """Combined influence with the variant's masking applied."""
        variant = self.config.variant
        if variant == "news_only":
            return torch.cat([state.news_hidden, torch.zeros_like(state.submission_hidden)])
        if variant == "submission_only":
            return torch.cat([torch.zeros_like(state.news_hidden), state.submission_hidden])
        return state.combined()

    # --- per-submission prediction -------------------------------------------

    def predict_submission(
        self,
        tokens: torch.Tensor,
        subreddit: torch.Tensor,
        rate: torch.Tensor,
        bins: torch.Tensor,
        influence: torch.Tensor | None,
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        """Returns (potential, scale, base, predicted) scalar tensors."""
        cfg = self.config
        if bins.numel() != cfg.m:
            raise ConfigurationError(f"expected {cfg.m} observation bins, got {bins.numel()}")
        dtype = cfg.torch_dtype
        if cfg.variant == "lstm_cc":
            zero = torch.zeros((), dtype=dtype)
            predicted = self.obs_head(bins.to(dtype), zero, include_base=False)
            outputs = (zero, torch.full((), 0.5, dtype=dtype), zero.clone(), predicted)
            return self._checked(outputs)
        subreddit_vec = self.subreddit_embedding(subreddit.reshape(1)).reshape(-1)
        if cfg.variant == "static":
            influence = None  # gains pinned to one
        elif influence is None:
            raise ConfigurationError(f"variant {cfg.variant!r} requires an influence state")
        x = self._embed(tokens.reshape(1, -1), cfg.max_len_submission)
        potential = self.tec(x, influence, subreddit_vec).reshape(())
        scale = self.scaler(rate.to(dtype))
        base = scale * potential
        if cfg.m == 0:
            predicted = base  # empty observation window: prediction is the base itself
        else:
            predicted = self.obs_head(bins.to(dtype), base, include_base=True)
        return self._checked((potential, scale, base, predicted))

    def _checked(self, outputs):
        if self.config.strict_checks:
            potential, scale, base, predicted = outputs
            values = torch.stack([potential, scale, base, predicted])
            if not torch.isfinite(values).all():
                raise NumericalError(f"non-finite forward outputs: {values.tolist()}")
            if potential.item() < 0 or predicted.item() < 0:
                raise NumericalError("intensity outputs must be nonnegative")
            if not (0.0 < scale.item() < 1.0):
                raise NumericalError("activity scale left (0, 1)")
        return outputs

    def set_word_embeddings(self, matrix) -> None:
        """Install a pretrained embedding matrix (PAD row forced to zero)."""
        tensor = torch.as_tensor(matrix, dtype=self.config.torch_dtype)
        if tensor.shape != self.embedding.weight.shape:
            raise ConfigurationError(
                f"embedding shape {tuple(tensor.shape)} does not match "
                f"{tuple(self.embedding.weight.shape)}"
            )
        with torch.no_grad():
            self.embedding.weight.copy_(tensor)
            self.embedding.weight[0].zero_()


def build_model(config: ModelConfig, seed: int) -> ChatterNet:
    """Deterministically initialized model (all randomness from the seed)."""
    torch.manual_seed(seed)
    return ChatterNet(config)
