"""Vectorized rollouts, evaluation metrics, and trajectory recording/replay.

Environments in a batch are fully independent; stepping them together is
purely a convenience and produces bit-identical trajectories to stepping
each alone with the same seed. Seed slots are derived deterministically:
batch slot `i` of a run with base seed `s` uses ``child_seed(s, f"env{i}")``
and agent `j` inside it draws its policy seed from
``child_seed(env_seed, f"policy{j}")``, so any slot can be reproduced in
isolation.

Trajectory files are line-delimited JSON with a versioned header. Bit-exact
replay relies on the recorded seed and actions, not on stored floats.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence, TextIO

import numpy as np

from .agents import Policy, make_policy
from .config import EnvConfig
from .env import (
    Collection,
    GridState,
    StepOutcome,
    child_seed,
    reset,
    state_hash,
    step,
)

TRAJECTORY_FORMAT = "colorgrid-trajectory"
TRAJECTORY_VERSION = 1


class TrajectoryError(ValueError):
    """Unreadable or unreplayable trajectory file."""


@dataclass
class EpisodeMetrics:
    """Net rewards and event counts over one fixed-horizon episode window.

    `sum_reward` is the headline metric: total unshaped block reward summed
    over agents, which always equals reward_goal * goal_collections plus the
    effective penalty times incorrect_collections. Shaping terms are
    accumulated separately in `shaped_sum_reward`.
    """

    horizon: int
    sum_reward: float
    per_agent_reward: list[float]
    shaped_sum_reward: float
    goal_collections: int
    incorrect_collections: int
    goal_switches: int


@dataclass
class EvalReport:
    n_envs: int
    n_seeds: int
    horizon: int
    mean_sum_reward: float
    std_sum_reward: float
    per_agent_mean: list[float]
    goal_collections: int
    incorrect_collections: int
    goal_switches: int
    env_sums: list[float]

    def to_dict(self) -> dict:
        return {
            "n_envs": self.n_envs,
            "n_seeds": self.n_seeds,
            "horizon": self.horizon,
            "mean_sum_reward": self.mean_sum_reward,
            "std_sum_reward": self.std_sum_reward,
            "per_agent_mean": self.per_agent_mean,
            "goal_collections": self.goal_collections,
            "incorrect_collections": self.incorrect_collections,
            "goal_switches": self.goal_switches,
        }


class VecEnv:
    """A batch of independent environments stepped in lockstep.

    `global_timestep` counts cumulative environment steps across the batch
    and any prior history; it advances by `n_envs` per vector step and feeds
    penalty annealing when stepping in training mode.
    """

    def __init__(self, config: EnvConfig, seeds: Sequence[int], global_timestep: int = 0):
        self.config = config
        self.states = [reset(config, s) for s in seeds]
        self.seeds = list(seeds)
        self.global_timestep = global_timestep

    @classmethod
    def from_base_seed(
        cls, config: EnvConfig, n_envs: int, base_seed: int, slot_offset: int = 0
    ) -> "VecEnv":
        seeds = [child_seed(base_seed, f"env{slot_offset + i}") for i in range(n_envs)]
        return cls(config, seeds)

    @property
    def n_envs(self) -> int:
        return len(self.states)

    def step(
        self, actions_per_env: Sequence[Sequence[int]], training: bool = False
    ) -> list[StepOutcome]:
        gt = self.global_timestep if training else None
        outcomes = [
            step(state, actions, gt)[1] for state, actions in zip(self.states, actions_per_env)
        ]
        self.global_timestep += len(self.states)
        return outcomes


def build_policies(config: EnvConfig, leader: str, follower: str, env_seed: int) -> list[Policy]:
    """One policy per agent, leaders first, each with its own derived seed."""
    policies: list[Policy] = []
    for j in range(config.n_agents):
        name = leader if j < config.num_leaders else follower
        policies.append(make_policy(name, seed=child_seed(env_seed, f"policy{j}"), agent_index=j))
    return policies


def run_episode(
    state: GridState,
    policies: Sequence[Policy],
    horizon: int,
    on_step: Callable[[Sequence[int], StepOutcome, GridState], None] | None = None,
) -> EpisodeMetrics:
    """Drive one episode for `horizon` steps in evaluation mode (anneal
    coefficient 1) and accumulate metrics from unshaped rewards."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    for policy in policies:
        policy.reset()
    n = len(policies)
    per_agent = [0.0] * n
    shaped_total = 0.0
    goal_collections = 0
    incorrect_collections = 0
    goal_switches = 0
    prev: StepOutcome | None = None
    for _ in range(horizon):
        actions = [policy.act(state, prev) for policy in policies]
        _, outcome = step(state, actions)
        for i in range(n):
            per_agent[i] += outcome.base_rewards[i]
        shaped_total += outcome.shared_reward
        for col in outcome.collections:
            if col.was_goal:
                goal_collections += 1
            else:
                incorrect_collections += 1
        goal_switches += outcome.goal_switched
        if on_step is not None:
            on_step(actions, outcome, state)
        prev = outcome
    return EpisodeMetrics(
        horizon=horizon,
        sum_reward=sum(per_agent),
        per_agent_reward=per_agent,
        shaped_sum_reward=shaped_total,
        goal_collections=goal_collections,
        incorrect_collections=incorrect_collections,
        goal_switches=goal_switches,
    )


def evaluate(
    config: EnvConfig,
    leader_policy: str = "astar_leader",
    follower_policy: str = "astar_copier",
    n_envs: int = 16,
    horizon: int = 128,
    n_seeds: int = 1,
    base_seed: int = 0,
) -> EvalReport:
    """Run `n_seeds` batches of `n_envs` environments for `horizon` steps and
    aggregate the net unshaped reward across all episodes.

    Evaluation always uses anneal coefficient 1 and excludes shaping terms
    from the headline numbers.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if n_envs < 1 or n_seeds < 1:
        raise ValueError("n_envs and n_seeds must be >= 1")
    env_sums: list[float] = []
    per_agent_totals = [0.0] * config.n_agents
    goal_collections = incorrect_collections = goal_switches = 0
    for batch in range(n_seeds):
        offset = batch * n_envs
        vec = VecEnv.from_base_seed(config, n_envs, base_seed, slot_offset=offset)
        policy_sets = [
            build_policies(config, leader_policy, follower_policy, vec.seeds[e])
            for e in range(n_envs)
        ]
        for policies in policy_sets:
            for p in policies:
                p.reset()
        sums = [0.0] * n_envs
        per_agent = [[0.0] * config.n_agents for _ in range(n_envs)]
        prev: list[StepOutcome | None] = [None] * n_envs
        for _ in range(horizon):
            actions = [
                [p.act(vec.states[e], prev[e]) for p in policy_sets[e]] for e in range(n_envs)
            ]
            outcomes = vec.step(actions)
            for e, outcome in enumerate(outcomes):
                sums[e] += sum(outcome.base_rewards)
                for i, r in enumerate(outcome.base_rewards):
                    per_agent[e][i] += r
                for col in outcome.collections:
                    if col.was_goal:
                        goal_collections += 1
                    else:
                        incorrect_collections += 1
                goal_switches += outcome.goal_switched
                prev[e] = outcome
        env_sums.extend(sums)
        for e in range(n_envs):
            for i in range(config.n_agents):
                per_agent_totals[i] += per_agent[e][i]
    n_episodes = len(env_sums)
    return EvalReport(
        n_envs=n_envs,
        n_seeds=n_seeds,
        horizon=horizon,
        mean_sum_reward=float(np.mean(env_sums)),
        std_sum_reward=float(np.std(env_sums)),
        per_agent_mean=[t / n_episodes for t in per_agent_totals],
        goal_collections=goal_collections,
        incorrect_collections=incorrect_collections,
        goal_switches=goal_switches,
        env_sums=env_sums,
    )


# --- trajectory recording ---------------------------------------------------


@dataclass
class TrajectoryStep:
    actions: list[int]
    goal: int  # goal color after the step's (possible) switch
    positions: list[tuple[int, int]]
    base_rewards: list[float]
    shaped_rewards: list[float]
    collections: list[Collection]
    switched: bool
    hash: str

    def to_json(self) -> dict:
        return {
            "actions": self.actions,
            "goal": self.goal,
            "positions": [list(p) for p in self.positions],
            "base_rewards": self.base_rewards,
            "shaped_rewards": self.shaped_rewards,
            "collections": [[c.agent, c.cell[0], c.cell[1], c.color, c.was_goal] for c in self.collections],
            "switched": self.switched,
            "hash": self.hash,
        }

    @staticmethod
    def from_json(d: dict) -> "TrajectoryStep":
        return TrajectoryStep(
            actions=[int(a) for a in d["actions"]],
            goal=int(d["goal"]),
            positions=[(int(p[0]), int(p[1])) for p in d["positions"]],
            base_rewards=[float(r) for r in d["base_rewards"]],
            shaped_rewards=[float(r) for r in d["shaped_rewards"]],
            collections=[
                Collection(int(a), (int(r), int(c)), int(col), bool(wg))
                for a, r, c, col, wg in d["collections"]
            ],
            switched=bool(d["switched"]),
            hash=str(d["hash"]),
        )


@dataclass
class TrajectoryRecord:
    config: EnvConfig
    seed: int
    policies: list[str]
    steps: list[TrajectoryStep] = field(default_factory=list)


def record_episode(
    config: EnvConfig,
    seed: int,
    leader_policy: str = "astar_leader",
    follower_policy: str = "astar_copier",
    horizon: int = 128,
) -> tuple[TrajectoryRecord, EpisodeMetrics]:
    """Run one seeded episode and capture everything needed for exact replay."""
    state = reset(config, seed)
    policies = build_policies(config, leader_policy, follower_policy, seed)
    names = [getattr(p, "name", type(p).__name__) for p in policies]
    record = TrajectoryRecord(config=config, seed=seed, policies=names)

    def capture(actions: Sequence[int], outcome: StepOutcome, st: GridState) -> None:
        record.steps.append(
            TrajectoryStep(
                actions=list(actions),
                goal=st.goal_color,
                positions=list(st.agent_positions),
                base_rewards=list(outcome.base_rewards),
                shaped_rewards=list(outcome.shaped_rewards),
                collections=list(outcome.collections),
                switched=outcome.goal_switched,
                hash=state_hash(st),
            )
        )

    metrics = run_episode(state, policies, horizon, on_step=capture)
    return record, metrics


def write_trajectory(record: TrajectoryRecord, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "format": TRAJECTORY_FORMAT,
            "version": TRAJECTORY_VERSION,
            "config": record.config.to_dict(),
            "seed": record.seed,
            "policies": record.policies,
            "n_steps": len(record.steps),
        }
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for entry in record.steps:
            fh.write(json.dumps(entry.to_json(), separators=(",", ":")) + "\n")


def read_trajectory(path: str) -> TrajectoryRecord:
    """Parse a trajectory file; malformed input raises TrajectoryError naming
    the offending step index and byte offset."""
    with open(path, "rb") as fh:
        data = fh.read()
    offset = 0
    lines = data.split(b"\n")
    if not lines or not lines[0]:
        raise TrajectoryError(f"{path}: empty file, no header (byte offset 0)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise TrajectoryError(f"{path}: unparseable header at byte offset 0: {exc}") from exc
    if header.get("format") != TRAJECTORY_FORMAT:
        raise TrajectoryError(f"{path}: not a {TRAJECTORY_FORMAT} file")
    if header.get("version") != TRAJECTORY_VERSION:
        raise TrajectoryError(
            f"{path}: unsupported version {header.get('version')!r}, "
            f"this reader handles version {TRAJECTORY_VERSION}"
        )
    record = TrajectoryRecord(
        config=EnvConfig.from_dict(header["config"]),
        seed=int(header["seed"]),
        policies=[str(p) for p in header.get("policies", [])],
    )
    offset = len(lines[0]) + 1
    expected = header.get("n_steps")
    for index, raw in enumerate(lines[1:]):
        if not raw:
            offset += 1
            continue
        try:
            record.steps.append(TrajectoryStep.from_json(json.loads(raw)))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError, IndexError) as exc:
            raise TrajectoryError(
                f"{path}: malformed step {index} at byte offset {offset}: {exc}"
            ) from exc
        offset += len(raw) + 1
    if expected is not None and len(record.steps) != expected:
        raise TrajectoryError(
            f"{path}: truncated at step {len(record.steps)} of {expected} "
            f"(byte offset {len(data)})"
        )
    return record


def replay(record: TrajectoryRecord) -> Iterator[tuple[GridState, TrajectoryStep]]:
    """Re-drive the engine with the recorded seed and actions, yielding the
    state after each step alongside the recorded entry."""
    state = reset(record.config, record.seed)
    for entry in record.steps:
        step(state, entry.actions)
        yield state, entry


def verify_replay(record: TrajectoryRecord) -> None:
    """Raise TrajectoryError on the first step where replay diverges."""
    for index, (state, entry) in enumerate(replay(record)):
        if state.agent_positions != entry.positions:
            raise TrajectoryError(
                f"replay diverged at step {index}: positions "
                f"{state.agent_positions} != recorded {entry.positions}"
            )
        if state.goal_color != entry.goal:
            raise TrajectoryError(
                f"replay diverged at step {index}: goal {state.goal_color} != {entry.goal}"
            )
        if state_hash(state) != entry.hash:
            raise TrajectoryError(f"replay diverged at step {index}: state hash mismatch")


# --- throughput -------------------------------------------------------------


@dataclass
class ThroughputReport:
    n_envs: int
    horizon: int
    total_steps: int
    elapsed_seconds: float
    steps_per_second: float
    per_env_steps_per_second: float

    def to_dict(self) -> dict:
        return {
            "n_envs": self.n_envs,
            "horizon": self.horizon,
            "total_steps": self.total_steps,
            "elapsed_seconds": self.elapsed_seconds,
            "steps_per_second": self.steps_per_second,
            "per_env_steps_per_second": self.per_env_steps_per_second,
        }


def measure_throughput(
    config: EnvConfig, n_envs: int = 1, horizon: int = 100_000, base_seed: int = 0
) -> ThroughputReport:
    """Step random-policy environments and report env steps per wall second."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    vec = VecEnv.from_base_seed(config, n_envs, base_seed)
    policy_sets = [
        build_policies(config, "random", "random", vec.seeds[e]) for e in range(n_envs)
    ]
    states = vec.states
    t0 = time.perf_counter()
    for _ in range(horizon):
        actions = [[p.act(states[e]) for p in policy_sets[e]] for e in range(n_envs)]
        vec.step(actions)
    elapsed = time.perf_counter() - t0
    total = n_envs * horizon
    return ThroughputReport(
        n_envs=n_envs,
        horizon=horizon,
        total_steps=total,
        elapsed_seconds=elapsed,
        steps_per_second=total / elapsed,
        per_env_steps_per_second=total / elapsed / n_envs,
    )


def emit_record(record: dict, stream: TextIO) -> None:
    """Write one line-delimited structured record."""
    stream.write(json.dumps(record, separators=(",", ":")) + "\n")
