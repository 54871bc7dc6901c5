"""Actor-critic model: shared conv + linear trunk, value/policy/goal heads.

Trunk: three 3x3 stride-1 valid convolutions (channels 5 -> 32 -> 64 -> 64)
with leaky-ReLU, flattened (43264 features at 32x32 input), then three
192-wide linear layers with tanh. The goal one-hot joins the trunk either
"early" (concatenated to the flattened conv features) or "late" (to the
input of the second linear layer). An optional LSTM cell (192 -> 192) sits
after the trunk for asymmetric followers. Heads: value 192->64->64->1,
policy 192->64->64->4, auxiliary goal classifier 192->64->3.
"""

from __future__ import annotations

import math

import torch
from torch import nn

GOAL_DIM = 3
N_ACTIONS = 4
FEATURE_DIM = 192
HEAD_HIDDEN = 64
CONV_CHANNELS = (5, 32, 64, 64)
CONV_KERNEL = 3


class ShapeError(ValueError):
    """Grid size incompatible with the convolution stack."""


def conv_output_side(side: int) -> int:
    out = side
    for _ in range(len(CONV_CHANNELS) - 1):
        out -= CONV_KERNEL - 1
    return out


def flat_dim(height: int, width: int) -> int:
    h, w = conv_output_side(height), conv_output_side(width)
    if h < 1 or w < 1:
        raise ShapeError(
            f"{height}x{width} input collapses in the conv stack; need at least "
            f"{2 * (len(CONV_CHANNELS) - 1) + 1} cells per side"
        )
    return CONV_CHANNELS[-1] * h * w


def _ortho(layer: nn.Module, gain: float = math.sqrt(2.0)) -> nn.Module:
    nn.init.orthogonal_(layer.weight, gain)
    nn.init.constant_(layer.bias, 0.0)
    return layer


class ActorCritic(nn.Module):
    def __init__(
        self,
        height: int = 32,
        width: int = 32,
        goal_concat: str = "early",
        recurrent: bool = False,
    ):
        super().__init__()
        if goal_concat not in ("early", "late"):
            raise ValueError(f"goal_concat must be 'early' or 'late', got {goal_concat!r}")
        self.goal_concat = goal_concat
        self.recurrent = recurrent
        self.flat_dim = flat_dim(height, width)

        convs = []
        for c_in, c_out in zip(CONV_CHANNELS, CONV_CHANNELS[1:]):
            convs.append(_ortho(nn.Conv2d(c_in, c_out, CONV_KERNEL, stride=1)))
            convs.append(nn.LeakyReLU())
        self.conv = nn.Sequential(*convs)

        fc1_in = self.flat_dim + (GOAL_DIM if goal_concat == "early" else 0)
        fc2_in = FEATURE_DIM + (GOAL_DIM if goal_concat == "late" else 0)
        self.fc1 = _ortho(nn.Linear(fc1_in, FEATURE_DIM))
        self.fc2 = _ortho(nn.Linear(fc2_in, FEATURE_DIM))
        self.fc3 = _ortho(nn.Linear(FEATURE_DIM, FEATURE_DIM))

        self.lstm = nn.LSTMCell(FEATURE_DIM, FEATURE_DIM) if recurrent else None
        if self.lstm is not None:
            nn.init.orthogonal_(self.lstm.weight_ih, 1.0)
            nn.init.orthogonal_(self.lstm.weight_hh, 1.0)
            nn.init.constant_(self.lstm.bias_ih, 0.0)
            nn.init.constant_(self.lstm.bias_hh, 0.0)

        self.value_head = nn.Sequential(
            _ortho(nn.Linear(FEATURE_DIM, HEAD_HIDDEN)), nn.Tanh(),
            _ortho(nn.Linear(HEAD_HIDDEN, HEAD_HIDDEN)), nn.Tanh(),
            _ortho(nn.Linear(HEAD_HIDDEN, 1), gain=1.0),
        )
        self.policy_head = nn.Sequential(
            _ortho(nn.Linear(FEATURE_DIM, HEAD_HIDDEN)), nn.Tanh(),
            _ortho(nn.Linear(HEAD_HIDDEN, HEAD_HIDDEN)), nn.Tanh(),
            _ortho(nn.Linear(HEAD_HIDDEN, N_ACTIONS), gain=0.01),
        )
        self.aux_head = nn.Sequential(
            _ortho(nn.Linear(FEATURE_DIM, HEAD_HIDDEN)), nn.Tanh(),
            _ortho(nn.Linear(HEAD_HIDDEN, GOAL_DIM), gain=1.0),
        )

    def initial_hidden(self, batch: int, device=None) -> tuple[torch.Tensor, torch.Tensor]:
        zeros = torch.zeros(batch, FEATURE_DIM, device=device)
        return zeros, zeros.clone()

    def trunk(self, grid: torch.Tensor, goal: torch.Tensor) -> torch.Tensor:
        x = self.conv(grid)
        x = torch.flatten(x, 1)
        if x.shape[1] != self.flat_dim:
            raise ShapeError(
                f"flattened conv output {x.shape[1]} != expected {self.flat_dim}; "
                "grid shape does not match the model"
            )
        if self.goal_concat == "early":
            x = torch.tanh(self.fc1(torch.cat([x, goal], dim=1)))
            x = torch.tanh(self.fc2(x))
        else:
            x = torch.tanh(self.fc1(x))
            x = torch.tanh(self.fc2(torch.cat([x, goal], dim=1)))
        return torch.tanh(self.fc3(x))

    def forward(
        self,
        grid: torch.Tensor,
        goal: torch.Tensor,
        hidden: tuple[torch.Tensor, torch.Tensor] | None = None,
    ):
        """Returns (policy logits, value, aux logits, next hidden)."""
        features = self.trunk(grid, goal)
        if self.lstm is not None:
            if hidden is None:
                hidden = self.initial_hidden(grid.shape[0], device=grid.device)
            h, c = self.lstm(features, hidden)
            features, hidden = h, (h, c)
        logits = self.policy_head(features)
        value = self.value_head(features).squeeze(-1)
        aux_logits = self.aux_head(features)
        return logits, value, aux_logits, hidden
