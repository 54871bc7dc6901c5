from __future__ import annotations

import pytest

from colorgrid import EnvConfig, GridState, reset


def build_state(
    width: int = 5,
    height: int = 5,
    blocks: dict[tuple[int, int], int] | None = None,
    positions: tuple = ((0, 0), (4, 4)),
    goal: int = 0,
    seed: int = 0,
    **cfg_overrides,
) -> GridState:
    """Hand-crafted state for scenario tests: reset for valid RNG streams,
    then overwrite the layout."""
    cfg_overrides.setdefault("block_density", 0.25)
    cfg = EnvConfig(width=width, height=height, **cfg_overrides)
    state = reset(cfg, seed)
    state.blocks = [-1] * cfg.n_cells
    state.block_cells = [set(), set(), set()]
    for (r, c), color in (blocks or {}).items():
        f = r * width + c
        state.blocks[f] = color
        state.block_cells[color].add(f)
    state.agent_positions = list(positions)
    state.goal_color = goal
    state.timestep = 0
    return state


def engine_observable(state: GridState):
    """Project a GridState onto the same observable tuple RefSim exposes."""
    width = state.config.width
    blocks = {}
    for f, color in enumerate(state.blocks):
        if color >= 0:
            blocks[(f // width, f % width)] = color
    return (blocks, tuple(state.agent_positions), state.goal_color, state.timestep)


@pytest.fixture
def small_config() -> EnvConfig:
    # 5x5 at 0.25 density: 6 blocks (2 per color) + 2 agents, 17 empty cells
    return EnvConfig(width=5, height=5, block_density=0.25)
