"""Parallel multi-agent environment binding over the colorgrid engine.

Follows the prevailing parallel-env conventions: named agents, dict-keyed
reset/step, per-agent observation and action spaces, and terminations /
truncations dicts. Observations are exactly the engine's encoder outputs
(same arrays, bit for bit); both agents receive the shared shaped reward as
their reward signal, while infos carry the true goal label (for auxiliary
supervision only) and the step's unshaped shared reward.

Episodes are fixed-horizon: `truncations` flip to True on the final step and
the live agent list empties. Set `global_timestep` before stepping to drive
penalty annealing during training; leave it None for evaluation behavior.
"""

from __future__ import annotations

from colorgrid import EnvConfig, GridState, StepOutcome, encode, reset, step

from .spaces import Box, DictSpace, Discrete

N_ACTIONS = 4


class ParallelEnvAdapter:
    metadata = {"name": "colorgrid_v0"}

    def __init__(self, config: EnvConfig, horizon: int = 128):
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        self.config = config
        self.horizon = horizon
        self.possible_agents = [f"leader_{i}" for i in range(config.num_leaders)] + [
            f"follower_{i}" for i in range(config.num_followers)
        ]
        self.agents: list[str] = []
        self.global_timestep: int | None = None
        self._state: GridState | None = None
        self._elapsed = 0
        side = 2 * config.view_radius + 1 if config.view_radius is not None else None
        obs_shape = (5, side or config.height, side or config.width)
        self._obs_space = DictSpace(
            {"grid": Box(0.0, 1.0, obs_shape), "goal": Box(0.0, 1.0, (3,))}
        )
        self._act_space = Discrete(N_ACTIONS)

    # -- spaces ---------------------------------------------------------

    def observation_space(self, agent: str) -> DictSpace:
        self._check_agent(agent)
        return self._obs_space

    def action_space(self, agent: str) -> Discrete:
        self._check_agent(agent)
        return self._act_space

    def _check_agent(self, agent: str) -> None:
        if agent not in self.possible_agents:
            raise KeyError(f"unknown agent {agent!r}; valid: {self.possible_agents}")

    # -- core API -------------------------------------------------------

    def reset(self, seed: int | None = None, options=None):
        self._state = reset(self.config, seed)
        self._elapsed = 0
        self.agents = list(self.possible_agents)
        return self._observe(), {agent: self._info() for agent in self.agents}

    def step(self, actions: dict[str, int]):
        if self._state is None:
            raise RuntimeError("step called before reset")
        if not self.agents:
            raise RuntimeError("episode is over; call reset")
        if set(actions) != set(self.agents):
            raise KeyError(f"actions must cover exactly {self.agents}, got {sorted(actions)}")
        ordered = [int(actions[agent]) for agent in self.possible_agents]
        _, outcome = step(self._state, ordered, self.global_timestep)
        self._elapsed += 1

        obs = self._observe()
        rewards = {agent: outcome.shared_reward for agent in self.agents}
        terminations = {agent: False for agent in self.agents}
        truncated = self._elapsed >= self.horizon
        truncations = {agent: truncated for agent in self.agents}
        infos = {agent: self._info(outcome) for agent in self.agents}
        if truncated:
            self.agents = []
        return obs, rewards, terminations, truncations, infos

    def state(self) -> GridState:
        """Native engine state (read-only by convention)."""
        if self._state is None:
            raise RuntimeError("state requested before reset")
        return self._state

    # -- helpers --------------------------------------------------------

    def _observe(self) -> dict[str, dict]:
        obs = {}
        for index, agent in enumerate(self.possible_agents):
            encoded = encode(self._state, index)
            obs[agent] = {"grid": encoded.channels, "goal": encoded.goal_vector}
        return obs

    def _info(self, outcome: StepOutcome | None = None) -> dict:
        info = {"goal_label": self._state.goal_color}
        if outcome is not None:
            info["shared_base_reward"] = sum(outcome.base_rewards)
            info["collections"] = len(outcome.collections)
        return info
