"""Building blocks: static and calibrated convolution stacks, activity
scaler, and the observation-window head.

Both convolution stacks run three parallel branches (kernel sizes 1/3/5 by
default) of three conv -> ReLU -> maxpool stages, same-size padding on the
convs, pool window 2 stride 2 (ceil mode, so short inputs survive).  Branch
outputs are concatenated channel-wise.  The static block reduces the
concatenation to a feature vector by a global position-wise max; the
calibrated block instead appends three kernel-size-1 convolutions (no
padding) tapering to one filter, then global max and ReLU, producing a
nonnegative scalar intensity.

In the calibrated block every convolution kernel is the layer's stored
kernel rescaled per output filter by a gain vector: a LeakyReLU of a linear
projection of the influence state plus a linear projection of the subreddit
embedding.  Gains broadcast over kernel positions and input channels.  With
gains pinned to one the block degenerates to a static stack over the same
kernels.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn


def init_linear_(layer: nn.Linear) -> None:
    nn.init.xavier_uniform_(layer.weight)
    if layer.bias is not None:
        nn.init.zeros_(layer.bias)


def init_rnn_(rnn: nn.RNNBase) -> None:
    for name, param in rnn.named_parameters():
        if name.startswith("weight"):
            nn.init.xavier_uniform_(param)
        else:
            nn.init.zeros_(param)


class StaticConvBlock(nn.Module):
    """Branched conv stack mapping (B, L, word_dim) -> (B, feature_dim)."""

    def __init__(self, word_dim: int, kernels: tuple[int, ...], filters: tuple[int, ...]):
        super().__init__()
        self.kernels = kernels
        self.branches = nn.ModuleList()
        for k in kernels:
            stages = nn.ModuleList()
            channels = word_dim
            for out_channels in filters:
                conv = nn.Conv1d(channels, out_channels, k, padding=k // 2)
                nn.init.xavier_uniform_(conv.weight)
                nn.init.zeros_(conv.bias)
                stages.append(conv)
                channels = out_channels
            self.branches.append(stages)
        self.pool = nn.MaxPool1d(2, stride=2, ceil_mode=True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x.transpose(1, 2)  # (B, word_dim, L)
        outputs = []
        for stages in self.branches:
            h = x
            for conv in stages:
                h = self.pool(F.relu(conv(h)))
            outputs.append(h)
        stacked = torch.cat(outputs, dim=1)  # (B, feature_dim, L//8)
        return stacked.max(dim=2).values


class CalibratedConv1d(nn.Module):
    """Conv1d whose kernel is rescaled per output filter by an input-dependent gain."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 influence_dim: int, subreddit_dim: int, alpha: float,
                 padding: int):
        super().__init__()
        self.alpha = alpha
        self.padding = padding
        self.weight = nn.Parameter(torch.empty(out_channels, in_channels, kernel_size))
        self.bias = nn.Parameter(torch.zeros(out_channels))
        nn.init.xavier_uniform_(self.weight)
        self.influence_proj = nn.Linear(influence_dim, out_channels, bias=False)
        self.subreddit_proj = nn.Linear(subreddit_dim, out_channels, bias=False)
        nn.init.xavier_uniform_(self.influence_proj.weight)
        nn.init.xavier_uniform_(self.subreddit_proj.weight)
        self.gain_bias = nn.Parameter(torch.zeros(out_channels))

    def gain(self, influence: torch.Tensor, subreddit_vec: torch.Tensor) -> torch.Tensor:
        pre = self.influence_proj(influence) + self.subreddit_proj(subreddit_vec) + self.gain_bias
        return F.leaky_relu(pre, negative_slope=self.alpha)

    def calibrated_kernel(self, gain: torch.Tensor) -> torch.Tensor:
        return self.weight * gain.view(-1, 1, 1)

    def forward(self, x: torch.Tensor, influence: torch.Tensor | None,
                subreddit_vec: torch.Tensor | None) -> torch.Tensor:
        if influence is None:  # static mode: gain pinned to one
            kernel = self.weight
        else:
            kernel = self.calibrated_kernel(self.gain(influence, subreddit_vec))
        return F.conv1d(x, kernel, self.bias, padding=self.padding)


class CalibratedConvBlock(nn.Module):
    """Branched calibrated conv stack mapping a text to a nonnegative scalar."""

    def __init__(self, word_dim: int, kernels: tuple[int, ...], filters: tuple[int, ...],
                 tail_filters: tuple[int, ...], influence_dim: int, subreddit_dim: int,
                 alpha: float, intensity_bias_init: float = 0.0):
        super().__init__()
        self.branches = nn.ModuleList()
        for k in kernels:
            stages = nn.ModuleList()
            channels = word_dim
            for out_channels in filters:
                stages.append(CalibratedConv1d(channels, out_channels, k,
                                               influence_dim, subreddit_dim,
                                               alpha, padding=k // 2))
                channels = out_channels
            self.branches.append(stages)
        self.pool = nn.MaxPool1d(2, stride=2, ceil_mode=True)
        concat_dim = len(kernels) * filters[-1]
        self.tail = nn.ModuleList()
        channels = concat_dim
        for out_channels in tail_filters:
            self.tail.append(CalibratedConv1d(channels, out_channels, 1,
                                              influence_dim, subreddit_dim,
                                              alpha, padding=0))
            channels = out_channels
        with torch.no_grad():
            self.tail[-1].bias.fill_(intensity_bias_init)

    def conv_layers(self) -> list[CalibratedConv1d]:
        layers = [conv for stages in self.branches for conv in stages]
        layers.extend(self.tail)
        return layers

    def forward(self, x: torch.Tensor, influence: torch.Tensor | None,
                subreddit_vec: torch.Tensor | None) -> torch.Tensor:
        """(B, L, word_dim) -> (B,) potential intensity.

        ``influence=None`` selects static mode (all gains one); otherwise the
        influence state and subreddit vector drive every layer's gain.
        """
        x = x.transpose(1, 2)
        outputs = []
        for stages in self.branches:
            h = x
            for conv in stages:
                h = self.pool(F.relu(conv(h, influence, subreddit_vec)))
            outputs.append(h)
        h = torch.cat(outputs, dim=1)
        last = len(self.tail) - 1
        for i, conv in enumerate(self.tail):
            h = conv(h, influence, subreddit_vec)
            if i < last:
                h = F.relu(h)
        pooled = h.max(dim=2).values.squeeze(1)  # (B,)
        return F.relu(pooled)


class ActivityScaler(nn.Module):
    """Maps a normalized activity rate to a scale strictly inside (0, 1)."""

    def __init__(self):
        super().__init__()
        self.ff = nn.Linear(1, 1)
        init_linear_(self.ff)

    def forward(self, rate: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.ff(rate.reshape(1, 1))).reshape(())


class ObservationHead(nn.Module):
    """LSTM over log1p comment-count bins, fused with the base intensity.

    The final hidden state is concatenated with the base intensity and
    mapped through a linear layer and ReLU.  For the counts-only ablation
    the base slot is fed a constant zero instead.
    """

    def __init__(self, lstm_hidden: int):
        super().__init__()
        self.lstm = nn.LSTM(1, lstm_hidden)
        init_rnn_(self.lstm)
        self.out = nn.Linear(lstm_hidden + 1, 1)
        init_linear_(self.out)

    def forward(self, bins: torch.Tensor, base: torch.Tensor,
                include_base: bool = True) -> torch.Tensor:
        seq = torch.log1p(bins.to(self.out.weight.dtype)).reshape(-1, 1, 1)
        _, (h_final, _) = self.lstm(seq)
        if include_base:
            fused = torch.cat([h_final.reshape(-1), base.reshape(1)])
        else:
            fused = torch.cat([h_final.reshape(-1), torch.zeros_like(base).reshape(1)])
        return F.relu(self.out(fused)).reshape(())
