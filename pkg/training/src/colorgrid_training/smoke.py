"""Desk-scale learnability experiment: 8x8, symmetric, neutral rewards.

One place defines the recipe so the acceptance test and the runnable script
stay in lockstep. Full-scale defaults live in TrainingConfig; the overrides
here are what it takes to move at all inside a 2M-step budget: a higher
constant learning rate with the KL stop disabled (at a few hundred updates a
0.01-KL cap freezes the policy near uniform), full-batch gradient steps, a
shorter credit horizon to cut partner noise out of the advantages, and a
fixed pool of training layouts (evaluation still draws fresh ones).
"""

from __future__ import annotations

from dataclasses import dataclass

from colorgrid import EnvConfig, ShapingConfig

from .ppo import IPPOTrainer, TrainingConfig, random_baseline

SMOKE_STEPS = 2_000_000

SMOKE_ENV = dict(
    width=8,
    height=8,
    block_density=0.10,
    goal_resample_probability=0.0,
    reward_goal=2.0,
    reward_incorrect=-1.0,
)

SMOKE_ANNEAL_WINDOW = (SMOKE_STEPS // 10, SMOKE_STEPS // 2)

SMOKE_TRAIN = dict(
    learning_rate=5e-4,
    target_kl=None,
    n_envs=32,
    n_minibatches=1,
    gamma=0.9,
    gae_lambda=0.9,
    layout_pool=64,
    total_timesteps=SMOKE_STEPS,
    seed=0,
)


@dataclass
class SmokeResult:
    anneal_on: float
    anneal_off: float
    random: float

    @property
    def learned(self) -> bool:
        return self.anneal_on > self.random

    @property
    def annealing_helped(self) -> bool:
        return self.anneal_on > self.anneal_off


def smoke_env_config(annealing: bool) -> EnvConfig:
    shaping = (
        ShapingConfig(anneal_start=SMOKE_ANNEAL_WINDOW[0], anneal_end=SMOKE_ANNEAL_WINDOW[1])
        if annealing
        else ShapingConfig()
    )
    return EnvConfig(**SMOKE_ENV, shaping=shaping)


def run_smoke_arm(annealing: bool, log_stream=None, eval_episodes: int = 64) -> float:
    """Train one arm and return its final evaluation score (fresh seeds,
    sampled actions, unshaped reward, anneal coefficient 1)."""
    trainer = IPPOTrainer(
        smoke_env_config(annealing), TrainingConfig(**SMOKE_TRAIN), log_stream=log_stream
    )
    trainer.train(eval_every=60)
    return trainer.evaluate_policies(n_episodes=eval_episodes)


def run_smoke(log_on=None, log_off=None, eval_episodes: int = 64) -> SmokeResult:
    on = run_smoke_arm(True, log_stream=log_on, eval_episodes=eval_episodes)
    off = run_smoke_arm(False, log_stream=log_off, eval_episodes=eval_episodes)
    rand = random_baseline(smoke_env_config(False), n_episodes=eval_episodes)
    return SmokeResult(anneal_on=on, anneal_off=off, random=rand)
