import random

import numpy as np
import pytest

from colorgrid import EnvConfig, encode, reset, step
from colorgrid_training import Box, DictSpace, Discrete, ParallelEnvAdapter


@pytest.fixture
def config():
    return EnvConfig(width=8, height=8, block_density=0.2)


class TestConformance:
    """The parallel-env conventions the binding promises to follow."""

    def test_agent_naming(self, config):
        env = ParallelEnvAdapter(config)
        assert env.possible_agents == ["leader_0", "follower_0"]

    def test_reset_signature(self, config):
        env = ParallelEnvAdapter(config)
        obs, infos = env.reset(seed=0)
        assert set(obs) == set(env.possible_agents) == set(infos)
        assert env.agents == env.possible_agents

    def test_step_returns_five_dicts_keyed_by_agent(self, config):
        env = ParallelEnvAdapter(config)
        env.reset(seed=0)
        result = env.step({"leader_0": 0, "follower_0": 1})
        assert len(result) == 5
        for mapping in result:
            assert set(mapping) == {"leader_0", "follower_0"}

    def test_observations_inhabit_their_spaces(self, config):
        env = ParallelEnvAdapter(config)
        obs, _ = env.reset(seed=3)
        for agent in env.agents:
            space = env.observation_space(agent)
            assert isinstance(space, DictSpace)
            assert space.contains(obs[agent])
            assert isinstance(env.action_space(agent), Discrete)
            assert env.action_space(agent).n == 4

    def test_action_space_sampling(self, config):
        env = ParallelEnvAdapter(config)
        rng = np.random.default_rng(0)
        samples = {env.action_space("leader_0").sample(rng) for _ in range(100)}
        assert samples == {0, 1, 2, 3}

    def test_truncation_at_horizon_empties_agents(self, config):
        env = ParallelEnvAdapter(config, horizon=3)
        env.reset(seed=0)
        for t in range(3):
            _, _, terms, truncs, _ = env.step({"leader_0": 0, "follower_0": 0})
            assert all(v is False for v in terms.values())
            assert all(v == (t == 2) for v in truncs.values())
        assert env.agents == []
        with pytest.raises(RuntimeError):
            env.step({"leader_0": 0, "follower_0": 0})

    def test_step_requires_exact_agent_keys(self, config):
        env = ParallelEnvAdapter(config)
        env.reset(seed=0)
        with pytest.raises(KeyError):
            env.step({"leader_0": 0})
        with pytest.raises(KeyError):
            env.step({"leader_0": 0, "follower_0": 0, "ghost_9": 0})

    def test_step_before_reset(self, config):
        env = ParallelEnvAdapter(config)
        with pytest.raises(RuntimeError):
            env.step({"leader_0": 0, "follower_0": 0})

    def test_unknown_agent_space_lookup(self, config):
        env = ParallelEnvAdapter(config)
        with pytest.raises(KeyError):
            env.observation_space("ghost_4")

    def test_shared_reward_identical_across_agents(self, config):
        env = ParallelEnvAdapter(config)
        env.reset(seed=5)
        rng = random.Random(0)
        for _ in range(40):
            if not env.agents:
                break
            _, rewards, _, _, _ = env.step(
                {a: rng.randrange(4) for a in env.agents}
            )
            assert rewards["leader_0"] == rewards["follower_0"]

    def test_asymmetric_goal_hidden_from_follower_only(self):
        cfg = EnvConfig(width=8, height=8, block_density=0.2, asymmetric=True)
        env = ParallelEnvAdapter(cfg)
        obs, infos = env.reset(seed=2)
        assert obs["leader_0"]["goal"].sum() == 1.0
        assert obs["follower_0"]["goal"].sum() == 0.0
        # the label still rides in infos for the auxiliary loss
        assert infos["follower_0"]["goal_label"] == infos["leader_0"]["goal_label"]


class TestBindingFidelity:
    def test_thousand_steps_bit_identical_to_native_engine(self, config):
        seed = 97
        horizon = 1000
        env = ParallelEnvAdapter(config, horizon=horizon)
        obs, _ = env.reset(seed=seed)

        native = reset(config, seed)
        rng = random.Random(123)
        for t in range(horizon):
            for index, agent in enumerate(env.possible_agents):
                expected = encode(native, index)
                assert np.array_equal(obs[agent]["grid"], expected.channels)
                assert np.array_equal(obs[agent]["goal"], expected.goal_vector)
            actions = [rng.randrange(4), rng.randrange(4)]
            obs, rewards, _, _, infos = env.step(
                {"leader_0": actions[0], "follower_0": actions[1]}
            )
            _, outcome = step(native, actions)
            assert rewards["leader_0"] == outcome.shared_reward
            assert infos["leader_0"]["shared_base_reward"] == sum(outcome.base_rewards)
            assert infos["leader_0"]["goal_label"] == native.goal_color

    def test_annealing_flows_through_global_timestep(self):
        from colorgrid import ShapingConfig

        cfg = EnvConfig(
            width=8, height=8, block_density=0.2,
            shaping=ShapingConfig(anneal_start=0, anneal_end=1000),
        )
        seed = 11
        env = ParallelEnvAdapter(cfg, horizon=200)
        env.reset(seed=seed)
        env.global_timestep = 500  # coefficient 0.5
        native = reset(cfg, seed)
        rng = random.Random(5)
        for _ in range(100):
            actions = [rng.randrange(4), rng.randrange(4)]
            _, rewards, _, _, _ = env.step({"leader_0": actions[0], "follower_0": actions[1]})
            _, outcome = step(native, actions, global_timestep=500)
            assert rewards["leader_0"] == outcome.shared_reward
