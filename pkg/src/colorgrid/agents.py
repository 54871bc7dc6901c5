"""Scripted baseline policies: A* leader, goal-copying A* follower, uniform random.

All policies read the full GridState (they are engine-side baselines, not
learned agents) and are deterministic given their construction seed. The
follower learns the goal only by watching the leader: it keeps a belief that
updates whenever the previous step's outcome shows a leader collection.
"""

from __future__ import annotations

import random
from heapq import heappop, heappush
from typing import NamedTuple, Protocol

from .config import N_COLORS
from .env import ACTION_DELTAS, Action, Cell, GridState, StepOutcome

POLICY_NAMES = ("astar_leader", "astar_copier", "random")


class Policy(Protocol):
    def reset(self) -> None: ...

    def act(self, state: GridState, prev_outcome: StepOutcome | None = None) -> int: ...


def astar_path(
    state: GridState, start: Cell, targets: set[Cell], obstacles: set[Cell]
) -> list[Cell] | None:
    """Minimum-length 4-connected path from `start` to any cell in `targets`,
    avoiding `obstacles`; None when unreachable.

    Heuristic is Manhattan distance to the nearest target (admissible and
    consistent). Ties are broken deterministically: the frontier pops in
    (f, row, col) order, and among equidistant targets the smallest (row, col)
    wins, so results are reproducible across runs.
    """
    if not targets:
        return None
    if start in targets:
        return [start]
    height, width = state.config.height, state.config.width
    target_list = list(targets)

    def h(r: int, c: int) -> int:
        return min(abs(r - tr) + abs(c - tc) for tr, tc in target_list)

    g: dict[Cell, int] = {start: 0}
    parent: dict[Cell, Cell | None] = {start: None}
    closed: set[Cell] = set()
    frontier: list[tuple[int, int, int]] = [(h(*start), start[0], start[1])]
    best_distance: int | None = None
    reached: list[Cell] = []

    while frontier:
        f, r, c = heappop(frontier)
        if best_distance is not None and f > best_distance:
            break
        cell = (r, c)
        if cell in closed:
            continue
        closed.add(cell)
        if cell in targets:
            best_distance = g[cell]
            reached.append(cell)
            continue
        ng = g[cell] + 1
        if best_distance is not None and ng > best_distance:
            continue
        for dr, dc in ACTION_DELTAS:
            nr, nc = r + dr, c + dc
            if nr < 0 or nr >= height or nc < 0 or nc >= width:
                continue
            neighbor = (nr, nc)
            if neighbor in closed or neighbor in obstacles:
                continue
            if ng < g.get(neighbor, 1 << 30):
                g[neighbor] = ng
                parent[neighbor] = cell
                heappush(frontier, (ng + h(nr, nc), nr, nc))

    if not reached:
        return None
    goal = min(reached)
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def _direction(src: Cell, dst: Cell) -> int:
    delta = (dst[0] - src[0], dst[1] - src[1])
    return ACTION_DELTAS.index(delta)


def _wander_action(state: GridState, agent_index: int) -> int:
    """Move to an adjacent empty cell, trying Up, Down, Left, Right in order.

    With no empty neighbor, pick a direction that is guaranteed to be blocked
    (off-grid or another agent) so the agent stays put rather than collecting;
    if even that is impossible the agent is walled in by blocks and Up is
    returned as a forced collection.
    """
    cfg = state.config
    r, c = state.agent_positions[agent_index]
    others = [p for i, p in enumerate(state.agent_positions) if i != agent_index]
    blocks = state.blocks
    blocked_fallback: int | None = None
    for action, (dr, dc) in enumerate(ACTION_DELTAS):
        nr, nc = r + dr, c + dc
        if nr < 0 or nr >= cfg.height or nc < 0 or nc >= cfg.width:
            if blocked_fallback is None:
                blocked_fallback = action
            continue
        if (nr, nc) in others:
            if blocked_fallback is None:
                blocked_fallback = action
            continue
        if blocks[nr * cfg.width + nc] == -1:
            return action
    if blocked_fallback is not None:
        return blocked_fallback
    return int(Action.UP)


def _block_cells(state: GridState, color: int) -> set[Cell]:
    width = state.config.width
    return {divmod(f, width) for f in state.block_cells[color]}


def _plan_route(state: GridState, agent_index: int, goal_color: int) -> tuple[int, Cell | None]:
    """First move of the shortest route to the nearest `goal_color` block,
    treating other-color blocks and other agents as impassable. Returns
    (action, planned target cell); target is None when no block is reachable
    and the agent falls back to wandering."""
    targets = _block_cells(state, goal_color)
    obstacles: set[Cell] = set()
    for color in range(N_COLORS):
        if color != goal_color:
            obstacles |= _block_cells(state, color)
    for i, pos in enumerate(state.agent_positions):
        if i != agent_index:
            obstacles.add(pos)
    path = astar_path(state, state.agent_positions[agent_index], targets, obstacles)
    if path is not None and len(path) >= 2:
        return _direction(path[0], path[1]), path[-1]
    return _wander_action(state, agent_index), None


def astar_leader_act(state: GridState, agent_index: int = 0) -> int:
    """Greedy optimal move toward the nearest goal-color block."""
    action, _ = _plan_route(state, agent_index, state.goal_color)
    return action


class FollowerBelief(NamedTuple):
    believed_goal: int | None = None
    last_leader_position: Cell | None = None


def astar_follower_act(
    state: GridState,
    belief: FollowerBelief,
    prev_outcome: StepOutcome | None = None,
    agent_index: int | None = None,
) -> tuple[int, FollowerBelief]:
    """Copying follower: wander until the leader first collects, then route to
    the nearest block of the last color the leader collected."""
    cfg = state.config
    if agent_index is None:
        agent_index = cfg.num_leaders
    believed = belief.believed_goal
    if prev_outcome is not None:
        for col in prev_outcome.collections:
            if col.agent < cfg.num_leaders:
                believed = col.color
    belief = FollowerBelief(believed, state.agent_positions[0])
    if believed is None:
        return _wander_action(state, agent_index), belief
    action, _ = _plan_route(state, agent_index, believed)
    return action, belief


def random_act(state: GridState, rng: random.Random) -> int:
    return rng.randrange(len(Action))


class RandomPolicy:
    name = "random"

    def __init__(self, seed: int = 0, agent_index: int = 0):
        self.agent_index = agent_index
        self._rng = random.Random(seed)

    def reset(self) -> None:
        pass

    def act(self, state: GridState, prev_outcome: StepOutcome | None = None) -> int:
        return self._rng.randrange(len(Action))


class AStarLeaderPolicy:
    name = "astar_leader"

    def __init__(self, seed: int = 0, agent_index: int = 0):
        self.agent_index = agent_index

    def reset(self) -> None:
        pass

    def act(self, state: GridState, prev_outcome: StepOutcome | None = None) -> int:
        return astar_leader_act(state, self.agent_index)


class AStarFollowerPolicy:
    name = "astar_copier"

    def __init__(self, seed: int = 0, agent_index: int | None = None):
        self.agent_index = agent_index
        self.belief = FollowerBelief()

    def reset(self) -> None:
        self.belief = FollowerBelief()

    def act(self, state: GridState, prev_outcome: StepOutcome | None = None) -> int:
        action, self.belief = astar_follower_act(
            state, self.belief, prev_outcome, self.agent_index
        )
        return action


_POLICY_CLASSES = {
    "astar_leader": AStarLeaderPolicy,
    "astar_copier": AStarFollowerPolicy,
    "random": RandomPolicy,
}


def make_policy(name: str, seed: int = 0, agent_index: int | None = None) -> Policy:
    try:
        cls = _POLICY_CLASSES[name]
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; valid: {sorted(_POLICY_CLASSES)}") from None
    if agent_index is None:
        return cls(seed=seed)
    return cls(seed=seed, agent_index=agent_index)
