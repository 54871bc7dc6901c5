"""Core grid world: state, reset, and the single-step transition.

The transition order within a step is fixed: resolve all moves, collect
blocks, respawn one block per collection, then maybe switch the goal, then
increment the timestep. Randomness is split into three named streams
(placement, respawn, goal) seeded independently from the episode seed, so
e.g. adding agents never perturbs the goal-switch sequence.

The RNG protocol is part of the engine contract (replay and the reference
simulator in the test suite rely on it):

* stream seeds are ``child_seed(seed, label)`` for labels ``"placement"``,
  ``"respawn"``, ``"goal"``;
* reset draws ``rng_placement.sample(range(n_cells), total_blocks + n_agents)``
  and assigns the first ``total_blocks`` cells to colors in equal chunks, the
  rest to agents (leaders first), then draws the initial goal with
  ``rng_goal.randrange(3)``;
* each respawn draws ``rng_respawn.randrange(n_cells)`` until it hits an
  empty cell;
* each step ends with one ``rng_goal.random()`` draw, followed by
  ``rng_goal.randrange(3)`` only when it falls below the resample probability.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Sequence

from . import shaping
from .config import N_COLORS, EnvConfig

Cell = tuple[int, int]


class EnvError(RuntimeError):
    """Raised when a transition is asked to do something impossible."""


class Action(IntEnum):
    """The four movement actions. There is no no-op; a blocked move stays put."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


# (row, col) deltas indexed by Action; row 0 is the top of the grid.
ACTION_DELTAS: tuple[Cell, ...] = ((-1, 0), (1, 0), (0, -1), (0, 1))


class Collection(NamedTuple):
    agent: int
    cell: Cell
    color: int
    was_goal: bool


@dataclass(slots=True)
class StepOutcome:
    """Per-step transition record.

    `base_rewards` holds each agent's block-collection reward (annealed
    penalty included, shaping excluded); `shaped_rewards` adds the shaping
    terms; `shared_reward` is the sum of shaped terms, the signal both
    agents receive.
    """

    base_rewards: list[float]
    shaped_rewards: list[float]
    shared_reward: float
    collections: list[Collection]
    goal_switched: bool
    new_goal: int


@dataclass(slots=True)
class GridState:
    """Full world state. `blocks` is flat row-major, -1 for empty; `block_cells`
    is the per-color index of the same occupancy, kept in sync by the engine."""

    config: EnvConfig
    blocks: list[int]
    block_cells: list[set[int]]
    agent_positions: list[Cell]  # leaders first
    goal_color: int
    timestep: int
    rng_placement: random.Random
    rng_respawn: random.Random
    rng_goal: random.Random

    def block_count(self, color: int) -> int:
        return len(self.block_cells[color])


def child_seed(seed: int, label: str) -> int:
    """Derive an independent 64-bit substream seed. Stable across processes."""
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def reset(config: EnvConfig, seed: int | None = None) -> GridState:
    """Build a fresh episode state: blocks and agents placed uniformly at
    random in distinct cells, goal drawn uniformly, timestep zero.

    Infeasible configurations are rejected by EnvConfig itself, so anything
    that reaches here fits on the grid with an empty cell to spare.
    """
    if seed is None:
        seed = config.seed
    rng_placement = random.Random(child_seed(seed, "placement"))
    rng_respawn = random.Random(child_seed(seed, "respawn"))
    rng_goal = random.Random(child_seed(seed, "goal"))

    total = config.total_blocks
    per_color = config.blocks_per_color
    cells = rng_placement.sample(range(config.n_cells), total + config.n_agents)

    blocks = [-1] * config.n_cells
    block_cells: list[set[int]] = [set() for _ in range(N_COLORS)]
    for color in range(N_COLORS):
        for f in cells[color * per_color : (color + 1) * per_color]:
            blocks[f] = color
            block_cells[color].add(f)
    width = config.width
    agent_positions = [divmod(f, width) for f in cells[total:]]
    goal = rng_goal.randrange(N_COLORS)

    return GridState(
        config=config,
        blocks=blocks,
        block_cells=block_cells,
        agent_positions=agent_positions,
        goal_color=goal,
        timestep=0,
        rng_placement=rng_placement,
        rng_respawn=rng_respawn,
        rng_goal=rng_goal,
    )


def step(
    state: GridState, actions: Sequence[int], global_timestep: int | None = None
) -> tuple[GridState, StepOutcome]:
    """Advance the world by one step, mutating and returning `state`.

    Move resolution is simultaneous: a move off the grid or into any other
    agent's pre-move cell is a no-op (so swaps leave both agents in place),
    and when several agents target the same cell the lowest index wins,
    leaders before followers. An agent entering a block cell collects it and
    a same-color block respawns in a uniformly random empty cell.

    `global_timestep` is the cumulative training-step counter that drives
    penalty annealing; None means evaluation (coefficient 1).
    """
    cfg = state.config
    positions = state.agent_positions
    n = len(positions)
    if len(actions) != n:
        raise ValueError(f"expected {n} actions, got {len(actions)}")
    width = cfg.width
    height = cfg.height
    blocks = state.blocks

    # movement
    pre_positions = set(positions)
    final = list(positions)
    claimed: set[Cell] = set()
    for i in range(n):
        r, c = positions[i]
        dr, dc = ACTION_DELTAS[actions[i]]
        nr = r + dr
        nc = c + dc
        if nr < 0 or nr >= height or nc < 0 or nc >= width:
            continue
        target = (nr, nc)
        if target in pre_positions or target in claimed:
            continue
        final[i] = target
        claimed.add(target)
    state.agent_positions = final

    # collection
    if global_timestep is None:
        coeff = 1.0
    else:
        coeff = shaping.anneal_coefficient(global_timestep, cfg.shaping)
    goal = state.goal_color
    base = [0.0] * n
    collections: list[Collection] = []
    for i in range(n):
        pos = final[i]
        f = pos[0] * width + pos[1]
        color = blocks[f]
        if color >= 0:
            blocks[f] = -1
            state.block_cells[color].remove(f)
            base[i] = shaping.base_reward(color, goal, cfg, coeff)
            collections.append(Collection(i, pos, color, color == goal))

    # respawn, one block per collection, after all moves have settled
    for col in collections:
        respawn_block(state, col.color)

    # shaping terms, reported separately from base rewards
    shaped = list(base)
    sh = cfg.shaping
    if sh.distance is not None:
        dc = sh.distance
        active = (
            dc.active_until is None
            or global_timestep is None
            or global_timestep < dc.active_until
        )
        if active:
            penalty = shaping.distance_penalty(final[0], final[cfg.num_leaders], sh)
            if penalty:
                target_index = 0 if dc.applies_to == "leader" else cfg.num_leaders
                shaped[target_index] += penalty
    if sh.potential_field is not None:
        for i in range(n):
            shaped[i] += shaping.potential_field_reward(state, final[i])

    _, switched = maybe_switch_goal(state)
    state.timestep += 1

    outcome = StepOutcome(
        base_rewards=base,
        shaped_rewards=shaped,
        shared_reward=sum(shaped),
        collections=collections,
        goal_switched=switched,
        new_goal=state.goal_color,
    )
    return state, outcome


def maybe_switch_goal(state: GridState) -> tuple[GridState, bool]:
    """With the configured probability, resample the goal uniformly from all
    three colors (so it actually changes 2/3 of the time it fires)."""
    old = state.goal_color
    if state.rng_goal.random() < state.config.goal_resample_probability:
        state.goal_color = state.rng_goal.randrange(N_COLORS)
    return state, state.goal_color != old


def respawn_block(state: GridState, color: int) -> Cell:
    """Place one block of `color` in a uniformly random empty cell (no block,
    no agent) and return it."""
    cfg = state.config
    n_blocks = sum(len(cells) for cells in state.block_cells)
    if n_blocks + cfg.n_agents >= cfg.n_cells:
        raise EnvError("no empty cell left to respawn a block into")
    blocks = state.blocks
    positions = state.agent_positions
    width = cfg.width
    n_cells = cfg.n_cells
    randrange = state.rng_respawn.randrange
    while True:
        f = randrange(n_cells)
        if blocks[f] == -1:
            cell = divmod(f, width)
            if cell not in positions:
                blocks[f] = color
                state.block_cells[color].add(f)
                return cell


def state_hash(state: GridState) -> str:
    """Canonical digest of the observable state (blocks, agents, goal, time)."""
    h = hashlib.sha256()
    h.update(f"{state.config.width}x{state.config.height};".encode())
    h.update(bytes(b + 1 for b in state.blocks))
    for r, c in state.agent_positions:
        h.update(f";{r},{c}".encode())
    h.update(f";g{state.goal_color};t{state.timestep}".encode())
    return h.hexdigest()


def _copy_rng(rng: random.Random) -> random.Random:
    out = random.Random()
    out.setstate(rng.getstate())
    return out


def copy_state(state: GridState) -> GridState:
    """Independent deep copy; the copy's RNG streams resume identically."""
    return GridState(
        config=state.config,
        blocks=list(state.blocks),
        block_cells=[set(s) for s in state.block_cells],
        agent_positions=list(state.agent_positions),
        goal_color=state.goal_color,
        timestep=state.timestep,
        rng_placement=_copy_rng(state.rng_placement),
        rng_respawn=_copy_rng(state.rng_respawn),
        rng_goal=_copy_rng(state.rng_goal),
    )


def role_of(config: EnvConfig, agent_index: int) -> str:
    return "leader" if agent_index < config.num_leaders else "follower"
