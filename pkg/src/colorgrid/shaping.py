"""Reward computation: base rewards, penalty annealing, distance and field shaping.

Everything here is a pure function; the engine calls into this module once
per collection or per step and reports shaped terms separately from base
rewards so evaluation can always be done on the unshaped signal.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .config import EnvConfig, RewardPreset, ShapingConfig

if TYPE_CHECKING:
    from .env import GridState

Cell = tuple[int, int]


def base_reward(collected: int, goal: int, cfg: EnvConfig, anneal_coeff: float = 1.0) -> float:
    """Reward for collecting a block of color `collected` while `goal` is active.

    Annealing scales only the incorrect-block penalty, never the goal reward.
    """
    if collected == goal:
        return cfg.reward_goal
    return anneal_coeff * cfg.reward_incorrect


def anneal_coefficient(global_timestep: int, cfg: ShapingConfig) -> float:
    """Penalty coefficient at a global training timestep: 0 before the window,
    1 at and after its end, linear in between. 1 everywhere when disabled."""
    if not cfg.annealing_enabled:
        return 1.0
    start, end = cfg.anneal_start, cfg.anneal_end
    if global_timestep >= end:
        return 1.0
    if global_timestep <= start:
        return 0.0
    return (global_timestep - start) / (end - start)


def distance_penalty(leader_pos: Cell, follower_pos: Cell, cfg: ShapingConfig) -> float:
    """-penalty when the two agents are strictly closer than the threshold, else 0."""
    dc = cfg.distance
    if dc is None:
        return 0.0
    d = abs(leader_pos[0] - follower_pos[0]) + abs(leader_pos[1] - follower_pos[1])
    return -dc.penalty if d < dc.threshold else 0.0


def default_field_scale(reward_goal: float, radius: int) -> float:
    # A fully packed ring at distance d holds 4d cells, each worth 1/d, so the
    # worst-case raw field on an unbounded grid sums to 4 * radius * scale.
    return 0.1 * reward_goal / (4 * radius)


def potential_field_reward(state: "GridState", agent_pos: Cell) -> float:
    """Field value at `agent_pos`: goal blocks attract, incorrect blocks repel.

    Sum over blocks within the cutoff radius of sign * scale / max(1, d),
    clamped to +-0.1 * reward_goal so collecting a goal block always pays an
    order of magnitude more than any field value.
    """
    cfg = state.config
    pf = cfg.shaping.potential_field
    if pf is None:
        return 0.0
    scale = pf.scale if pf.scale is not None else default_field_scale(cfg.reward_goal, pf.radius)
    radius = pf.radius
    width = cfg.width
    ar, ac = agent_pos
    total = 0.0
    for color, cells in enumerate(state.block_cells):
        sign = scale if color == state.goal_color else -scale
        for f in cells:
            d = abs(f // width - ar) + abs(f % width - ac)
            if d <= radius:
                total += sign / (d if d > 1 else 1)
    cap = 0.1 * cfg.reward_goal
    return min(cap, max(-cap, total))


def expected_random_pickup_value(preset: RewardPreset) -> float:
    """Expected reward of collecting a uniformly random block under a preset."""
    return preset.reward_goal / 3.0 + 2.0 * preset.reward_incorrect / 3.0
