"""Per-agent observation encoding.

Layout contract (consumed by the training binding): `channels` is a
(5, height, width) float32 tensor of binary planes in row-major (channel,
row, col) order, planes ordered [color0, color1, color2, leader, follower].
The goal vector is a 3-element one-hot, zeroed for an asymmetric follower;
`goal_label` always carries the true goal index for auxiliary supervision
and must never be fed to an asymmetric policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import N_COLORS, EnvConfig
from .env import Cell, GridState

N_CHANNELS = N_COLORS + 2


@dataclass
class Observation:
    channels: np.ndarray  # (5, H, W) float32, binary
    goal_vector: np.ndarray  # (3,) float32, one-hot or zeros
    goal_label: int


def encode(state: GridState, agent_index: int, cfg: EnvConfig | None = None) -> Observation:
    """Encode the world as seen by `agent_index`. Pure; never mutates state."""
    if cfg is None:
        cfg = state.config
    if not 0 <= agent_index < cfg.n_agents:
        raise IndexError(f"agent_index {agent_index} out of range for {cfg.n_agents} agents")

    height, width = cfg.height, cfg.width
    channels = np.zeros((N_CHANNELS, height, width), dtype=np.float32)
    for color in range(N_COLORS):
        cells = state.block_cells[color]
        if cells:
            flat = np.fromiter(cells, dtype=np.int64, count=len(cells))
            channels[color].flat[flat] = 1.0

    is_leader_viewer = agent_index < cfg.num_leaders
    for i, (r, c) in enumerate(state.agent_positions):
        plane = _agent_plane(cfg, i, agent_index, is_leader_viewer)
        channels[plane, r, c] = 1.0

    if cfg.view_radius is not None:
        channels = _egocentric_crop(channels, state.agent_positions[agent_index], cfg.view_radius)

    goal_vector = np.zeros(N_COLORS, dtype=np.float32)
    hide_goal = cfg.asymmetric and not is_leader_viewer
    if not hide_goal:
        goal_vector[state.goal_color] = 1.0

    return Observation(channels=channels, goal_vector=goal_vector, goal_label=state.goal_color)


def _agent_plane(cfg: EnvConfig, subject: int, viewer: int, viewer_is_leader: bool) -> int:
    if not cfg.role_relative_obs:
        # absolute roles: plane 3 marks every leader, plane 4 every follower
        return N_COLORS if subject < cfg.num_leaders else N_COLORS + 1
    return N_COLORS if subject == viewer else N_COLORS + 1


def _egocentric_crop(channels: np.ndarray, center: Cell, radius: int) -> np.ndarray:
    """Square crop of side 2*radius+1 centered on the agent, zero-padded."""
    _, height, width = channels.shape
    side = 2 * radius + 1
    out = np.zeros((channels.shape[0], side, side), dtype=channels.dtype)
    r, c = center
    src_r0, src_r1 = max(0, r - radius), min(height, r + radius + 1)
    src_c0, src_c1 = max(0, c - radius), min(width, c + radius + 1)
    dst_r0 = src_r0 - (r - radius)
    dst_c0 = src_c0 - (c - radius)
    out[:, dst_r0 : dst_r0 + (src_r1 - src_r0), dst_c0 : dst_c0 + (src_c1 - src_c0)] = channels[
        :, src_r0:src_r1, src_c0:src_c1
    ]
    return out


def decode(obs: Observation) -> tuple[dict[Cell, int], list[Cell], list[Cell]]:
    """Invert a full-view absolute-role encoding back to occupancy.

    Returns (block cells by color, leader cells, follower cells); used to
    check the encoding is lossless.
    """
    blocks: dict[Cell, int] = {}
    for color in range(N_COLORS):
        for r, c in zip(*np.nonzero(obs.channels[color])):
            blocks[(int(r), int(c))] = color
    leaders = [(int(r), int(c)) for r, c in zip(*np.nonzero(obs.channels[N_COLORS]))]
    followers = [(int(r), int(c)) for r, c in zip(*np.nonzero(obs.channels[N_COLORS + 1]))]
    return blocks, leaders, followers
