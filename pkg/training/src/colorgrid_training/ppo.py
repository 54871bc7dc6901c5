"""Independent PPO for the two-agent grid world.

Leader and follower own fully independent networks and optimizers (no
parameter sharing). Per-agent loss is the clipped PPO surrogate plus value
and entropy terms, and the auxiliary goal cross-entropy added with weight
kappa: total = L_PPO + kappa * CE(goal_logits, true_goal), which reduces
exactly to L_PPO at kappa = 0. The true goal label rides in the adapter's
infos and is never part of an asymmetric follower's observation.

Conventions the source material leaves open follow the usual PPO-baseline
choices: orthogonal init (in nets), Adam, advantage normalization per
minibatch, clipped value loss, gradient-norm clipping, and a constant
learning rate. The recurrent (asymmetric) path trains on whole-episode
sequences with minibatches over environments; hidden state resets at
episode boundaries, which coincide with rollout boundaries here.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import TextIO

import numpy as np
import torch
from torch import nn
from torch.distributions import Categorical

from colorgrid import EnvConfig, child_seed
from colorgrid import evaluate as engine_evaluate

from .adapter import ParallelEnvAdapter
from .nets import ActorCritic

CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    """Raised on non-finite loss, carrying minibatch diagnostics."""

    def __init__(self, agent: str, stats: dict):
        super().__init__(f"non-finite loss while updating {agent}: {json.dumps(stats)}")
        self.stats = stats


@dataclass
class TrainingConfig:
    learning_rate: float = 1e-4
    n_envs: int = 16
    rollout_steps: int = 128
    gamma: float = 0.99
    gae_lambda: float = 0.95
    n_minibatches: int = 4
    update_epochs: int = 4
    clip_coef: float = 0.2
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    target_kl: float | None = 0.01
    aux_coef: float = 0.2  # kappa
    goal_concat: str = "early"
    total_timesteps: int = 2_000_000
    max_grad_norm: float = 0.5
    clip_value_loss: bool = True
    # when set, training episodes cycle through this many fixed layout seeds
    # instead of drawing a fresh layout per episode; evaluation always uses
    # fresh seeds either way
    layout_pool: int | None = None
    seed: int = 0
    device: str = "cpu"

    def __post_init__(self):
        if self.aux_coef < 0:
            raise ValueError(f"aux_coef must be >= 0, got {self.aux_coef}")
        for name in ("learning_rate", "n_envs", "rollout_steps", "n_minibatches",
                     "update_epochs", "clip_coef", "total_timesteps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def compute_gae(
    rewards: torch.Tensor,
    values: torch.Tensor,
    bootstrap_value: torch.Tensor,
    gamma: float,
    gae_lambda: float,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Generalized advantage estimation over a (T, N) rollout with a
    bootstrap value for the truncated final state."""
    steps = rewards.shape[0]
    advantages = torch.zeros_like(rewards)
    last = torch.zeros_like(bootstrap_value)
    next_value = bootstrap_value
    for t in reversed(range(steps)):
        delta = rewards[t] + gamma * next_value - values[t]
        last = delta + gamma * gae_lambda * last
        advantages[t] = last
        next_value = values[t]
    return advantages, advantages + values


def ppo_loss(
    logits: torch.Tensor,
    values: torch.Tensor,
    actions: torch.Tensor,
    old_logprobs: torch.Tensor,
    old_values: torch.Tensor,
    advantages: torch.Tensor,
    returns: torch.Tensor,
    cfg: TrainingConfig,
) -> tuple[torch.Tensor, dict]:
    """Clipped-surrogate PPO loss (policy + value + entropy), plus stats."""
    dist = Categorical(logits=logits)
    logprobs = dist.log_prob(actions)
    logratio = logprobs - old_logprobs
    ratio = logratio.exp()
    norm_adv = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
    pg_loss = torch.max(-norm_adv * ratio, -norm_adv * torch.clamp(
        ratio, 1 - cfg.clip_coef, 1 + cfg.clip_coef)).mean()
    if cfg.clip_value_loss:
        clipped = old_values + torch.clamp(values - old_values, -cfg.clip_coef, cfg.clip_coef)
        v_loss = 0.5 * torch.max((values - returns) ** 2, (clipped - returns) ** 2).mean()
    else:
        v_loss = 0.5 * ((values - returns) ** 2).mean()
    entropy = dist.entropy().mean()
    loss = pg_loss - cfg.entropy_coef * entropy + cfg.value_coef * v_loss
    with torch.no_grad():
        approx_kl = ((ratio - 1) - logratio).mean()
    stats = {
        "pg_loss": pg_loss.item(),
        "v_loss": v_loss.item(),
        "entropy": entropy.item(),
        "approx_kl": approx_kl.item(),
    }
    return loss, stats


def aux_cross_entropy(aux_logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """CE(true goal | goal head) = -sum_i c_i log c_hat_i averaged over the batch."""
    return nn.functional.cross_entropy(aux_logits, labels)


@dataclass
class Rollout:
    grids: torch.Tensor  # (T, N, 5, H, W)
    goals: torch.Tensor  # (T, N, 3)
    labels: torch.Tensor  # (T, N) true goal indices
    actions: torch.Tensor  # (T, N)
    logprobs: torch.Tensor  # (T, N)
    values: torch.Tensor  # (T, N)
    rewards: torch.Tensor  # (T, N) shared shaped reward
    bootstrap_value: torch.Tensor  # (N,)


def save_checkpoint(path: str, model: ActorCritic, meta: dict) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "model_state": model.state_dict(),
        "goal_concat": model.goal_concat,
        "recurrent": model.recurrent,
        "meta": meta,
    }
    torch.save(payload, path)


def load_checkpoint(path: str) -> dict:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version!r}")
    return payload


class IPPOTrainer:
    """Two independent PPO learners over a batch of adapter-wrapped envs."""

    AGENT_NAMES = ("leader", "follower")

    def __init__(
        self,
        env_config: EnvConfig,
        cfg: TrainingConfig,
        log_stream: TextIO | None = None,
        frozen_leader: str | None = None,
        warmstart_follower: str | None = None,
    ):
        if env_config.num_leaders != 1 or env_config.num_followers != 1:
            raise ValueError("the reference trainer targets the 1:1 scenario")
        self.env_config = env_config
        self.cfg = cfg
        self.device = torch.device(cfg.device)
        self.log_stream = log_stream
        torch.manual_seed(cfg.seed)

        self.envs = [
            ParallelEnvAdapter(env_config, horizon=cfg.rollout_steps)
            for _ in range(cfg.n_envs)
        ]
        self.agent_ids = self.envs[0].possible_agents  # ["leader_0", "follower_0"]

        # leader always observes the goal, so only the follower is recurrent
        # in the asymmetric setting
        self.models = {
            "leader": ActorCritic(env_config.height, env_config.width,
                                  goal_concat=cfg.goal_concat).to(self.device),
            "follower": ActorCritic(env_config.height, env_config.width,
                                    goal_concat=cfg.goal_concat,
                                    recurrent=env_config.asymmetric).to(self.device),
        }
        self.frozen = {"leader": False, "follower": False}
        if frozen_leader is not None:
            payload = load_checkpoint(frozen_leader)
            self.models["leader"].load_state_dict(payload["model_state"])
            self.frozen["leader"] = True
        if warmstart_follower is not None:
            payload = load_checkpoint(warmstart_follower)
            self.models["follower"].load_state_dict(payload["model_state"])
        self.optimizers = {
            name: torch.optim.Adam(model.parameters(), lr=cfg.learning_rate, eps=1e-5)
            for name, model in self.models.items()
            if not self.frozen[name]
        }
        self.global_step = 0
        self.update_index = 0

    # -- rollout ---------------------------------------------------------

    def _obs_tensors(self, obs: dict) -> dict[str, tuple[torch.Tensor, torch.Tensor]]:
        out = {}
        for name, agent_id in zip(self.AGENT_NAMES, self.agent_ids):
            grids = torch.from_numpy(np.stack([o[agent_id]["grid"] for o in obs])).to(self.device)
            goals = torch.from_numpy(np.stack([o[agent_id]["goal"] for o in obs])).to(self.device)
            out[name] = (grids, goals)
        return out

    def collect_rollout(self) -> tuple[dict[str, Rollout], dict]:
        cfg = self.cfg
        steps, n = cfg.rollout_steps, cfg.n_envs
        if cfg.layout_pool is not None:
            first = self.update_index * n
            seeds = [
                child_seed(cfg.seed, f"layout{(first + e) % cfg.layout_pool}")
                for e in range(n)
            ]
        else:
            seeds = [
                child_seed(cfg.seed, f"rollout{self.update_index}/env{e}") for e in range(n)
            ]
        resets = [env.reset(seed=s) for env, s in zip(self.envs, seeds)]
        obs = [r[0] for r in resets]
        labels_now = [r[1][self.agent_ids[0]]["goal_label"] for r in resets]

        store = {
            name: Rollout(
                grids=torch.zeros(steps, n, *obs[0][self.agent_ids[0]]["grid"].shape),
                goals=torch.zeros(steps, n, 3),
                labels=torch.zeros(steps, n, dtype=torch.long),
                actions=torch.zeros(steps, n, dtype=torch.long),
                logprobs=torch.zeros(steps, n),
                values=torch.zeros(steps, n),
                rewards=torch.zeros(steps, n),
                bootstrap_value=torch.zeros(n),
            )
            for name in self.AGENT_NAMES
        }
        hidden = {name: None for name in self.AGENT_NAMES}
        base_reward_sum = np.zeros(n)
        shaped_reward_sum = np.zeros(n)

        for t in range(steps):
            tensors = self._obs_tensors(obs)
            actions_per_env: list[dict[str, int]] = [{} for _ in range(n)]
            with torch.no_grad():
                for name, agent_id in zip(self.AGENT_NAMES, self.agent_ids):
                    grids, goals = tensors[name]
                    model = self.models[name]
                    logits, value, _, hidden[name] = model(grids, goals, hidden[name])
                    dist = Categorical(logits=logits)
                    action = dist.sample()
                    roll = store[name]
                    roll.grids[t] = grids
                    roll.goals[t] = goals
                    roll.labels[t] = torch.tensor(labels_now, dtype=torch.long)
                    roll.actions[t] = action
                    roll.logprobs[t] = dist.log_prob(action)
                    roll.values[t] = value
                    for e in range(n):
                        actions_per_env[e][agent_id] = int(action[e])

            next_obs = []
            for e, env in enumerate(self.envs):
                env.global_timestep = self.global_step
                ob, rewards, _, _, infos = env.step(actions_per_env[e])
                next_obs.append(ob)
                info = infos[self.agent_ids[0]]
                labels_now[e] = info["goal_label"]
                base_reward_sum[e] += info["shared_base_reward"]
                shaped_reward_sum[e] += rewards[self.agent_ids[0]]
                for name in self.AGENT_NAMES:
                    store[name].rewards[t, e] = rewards[self.agent_ids[0]]
            obs = next_obs
            self.global_step += n

        tensors = self._obs_tensors(obs)
        with torch.no_grad():
            for name in self.AGENT_NAMES:
                grids, goals = tensors[name]
                _, value, _, _ = self.models[name](grids, goals, hidden[name])
                store[name].bootstrap_value[:] = value
        stats = {
            "mean_episode_reward": float(base_reward_sum.mean()),
            "mean_episode_shaped_reward": float(shaped_reward_sum.mean()),
        }
        return store, stats

    # -- updates ---------------------------------------------------------

    def _divergence_stats(self, name, loss, logits, advantages, returns) -> dict:
        def summary(x):
            x = x.detach()
            return {"mean": float(x.mean()), "min": float(x.min()), "max": float(x.max())}

        return {
            "agent": name,
            "update": self.update_index,
            "loss": float(loss.detach()),
            "logits": summary(logits),
            "advantages": summary(advantages),
            "returns": summary(returns),
        }

    def update_agent(self, name: str, roll: Rollout) -> dict:
        cfg = self.cfg
        model = self.models[name]
        optimizer = self.optimizers[name]
        advantages, returns = compute_gae(
            roll.rewards, roll.values, roll.bootstrap_value, cfg.gamma, cfg.gae_lambda
        )
        if model.recurrent:
            return self._update_recurrent(name, model, optimizer, roll, advantages, returns)
        return self._update_feedforward(name, model, optimizer, roll, advantages, returns)

    def _update_feedforward(self, name, model, optimizer, roll, advantages, returns) -> dict:
        cfg = self.cfg
        flat = lambda x: x.reshape(-1, *x.shape[2:])
        grids, goals = flat(roll.grids), flat(roll.goals)
        labels, actions = flat(roll.labels), flat(roll.actions)
        old_logprobs, old_values = flat(roll.logprobs), flat(roll.values)
        adv, ret = flat(advantages), flat(returns)
        batch = grids.shape[0]
        minibatch = batch // cfg.n_minibatches
        gen = torch.Generator().manual_seed(cfg.seed + self.update_index)
        last_stats: dict = {}
        for epoch in range(cfg.update_epochs):
            perm = torch.randperm(batch, generator=gen)
            stop = False
            for start in range(0, batch, minibatch):
                idx = perm[start : start + minibatch]
                logits, values, aux_logits, _ = model(grids[idx], goals[idx])
                loss, stats = ppo_loss(
                    logits, values, actions[idx], old_logprobs[idx], old_values[idx],
                    adv[idx], ret[idx], cfg,
                )
                aux = aux_cross_entropy(aux_logits, labels[idx])
                total = loss + cfg.aux_coef * aux
                if not torch.isfinite(total):
                    raise TrainingDiverged(
                        name, self._divergence_stats(name, total, logits, adv[idx], ret[idx])
                    )
                optimizer.zero_grad()
                total.backward()
                nn.utils.clip_grad_norm_(model.parameters(), cfg.max_grad_norm)
                optimizer.step()
                stats["aux_loss"] = aux.item()
                stats["aux_accuracy"] = float((aux_logits.argmax(-1) == labels[idx]).float().mean())
                last_stats = stats
                if cfg.target_kl is not None and stats["approx_kl"] > cfg.target_kl:
                    stop = True
                    break
            if stop:
                break
        return last_stats

    def _update_recurrent(self, name, model, optimizer, roll, advantages, returns) -> dict:
        cfg = self.cfg
        n = cfg.n_envs
        envs_per_batch = max(1, n // cfg.n_minibatches)
        gen = torch.Generator().manual_seed(cfg.seed + self.update_index)
        last_stats: dict = {}
        for epoch in range(cfg.update_epochs):
            perm = torch.randperm(n, generator=gen)
            stop = False
            for start in range(0, n, envs_per_batch):
                idx = perm[start : start + envs_per_batch]
                hidden = model.initial_hidden(len(idx), device=self.device)
                logit_seq, value_seq, aux_seq = [], [], []
                for t in range(cfg.rollout_steps):
                    logits, values, aux_logits, hidden = model(
                        roll.grids[t, idx], roll.goals[t, idx], hidden
                    )
                    logit_seq.append(logits)
                    value_seq.append(values)
                    aux_seq.append(aux_logits)
                logits = torch.cat(logit_seq)
                values = torch.cat(value_seq)
                aux_logits = torch.cat(aux_seq)
                cat = lambda x: x[:, idx].reshape(-1, *x.shape[2:])
                loss, stats = ppo_loss(
                    logits, values, cat(roll.actions), cat(roll.logprobs), cat(roll.values),
                    cat(advantages), cat(returns), cfg,
                )
                aux = aux_cross_entropy(aux_logits, cat(roll.labels))
                total = loss + cfg.aux_coef * aux
                if not torch.isfinite(total):
                    raise TrainingDiverged(
                        name,
                        self._divergence_stats(name, total, logits, cat(advantages), cat(returns)),
                    )
                optimizer.zero_grad()
                total.backward()
                nn.utils.clip_grad_norm_(model.parameters(), cfg.max_grad_norm)
                optimizer.step()
                stats["aux_loss"] = aux.item()
                stats["aux_accuracy"] = float((aux_logits.argmax(-1) == cat(roll.labels)).float().mean())
                last_stats = stats
                if cfg.target_kl is not None and stats["approx_kl"] > cfg.target_kl:
                    stop = True
                    break
            if stop:
                break
        return last_stats

    # -- driver ----------------------------------------------------------

    def _log(self, record: dict) -> None:
        if self.log_stream is not None:
            self.log_stream.write(json.dumps(record, separators=(",", ":")) + "\n")
            self.log_stream.flush()

    def train(self, eval_every: int | None = None, eval_episodes: int = 16) -> dict:
        cfg = self.cfg
        n_updates = cfg.total_timesteps // (cfg.n_envs * cfg.rollout_steps)
        self._log({
            "kind": "train_header",
            "env_config": self.env_config.to_dict(),
            "train_config": asdict(cfg),
            "n_updates": n_updates,
            "frozen": self.frozen,
        })
        start = time.perf_counter()
        summary: dict = {}
        for update in range(n_updates):
            self.update_index = update
            rollout, roll_stats = self.collect_rollout()
            record = {
                "kind": "train_update",
                "update": update,
                "global_timestep": self.global_step,
                **roll_stats,
            }
            for agent_name in self.AGENT_NAMES:
                if self.frozen[agent_name]:
                    continue
                stats = self.update_agent(agent_name, rollout[agent_name])
                record.update({f"{agent_name}_{k}": v for k, v in stats.items()})
            record["sps"] = int(self.global_step / (time.perf_counter() - start))
            self._log(record)
            summary = record
            if eval_every and (update + 1) % eval_every == 0:
                score = self.evaluate_policies(n_episodes=eval_episodes)
                self._log({"kind": "eval", "update": update,
                           "global_timestep": self.global_step,
                           "mean_sum_reward": score})
        return summary

    @torch.no_grad()
    def evaluate_policies(
        self, n_episodes: int = 16, horizon: int = 128, seed: int = 10_000_000, greedy: bool = False
    ) -> float:
        """Mean net unshaped reward over fixed-horizon evaluation episodes
        (anneal coefficient 1, shaping excluded)."""
        totals = []
        for episode in range(n_episodes):
            env = ParallelEnvAdapter(self.env_config, horizon=horizon)
            env.global_timestep = None
            obs, infos = env.reset(seed=child_seed(seed, f"eval{episode}"))
            hidden = {name: None for name in self.AGENT_NAMES}
            total = 0.0
            while env.agents:
                actions = {}
                for name, agent_id in zip(self.AGENT_NAMES, self.agent_ids):
                    grid = torch.from_numpy(obs[agent_id]["grid"]).unsqueeze(0).to(self.device)
                    goal = torch.from_numpy(obs[agent_id]["goal"]).unsqueeze(0).to(self.device)
                    logits, _, _, hidden[name] = self.models[name](grid, goal, hidden[name])
                    if greedy:
                        actions[agent_id] = int(logits.argmax(-1))
                    else:
                        actions[agent_id] = int(Categorical(logits=logits).sample())
                obs, _, _, _, infos = env.step(actions)
                total += infos[self.agent_ids[0]]["shared_base_reward"]
            totals.append(total)
        return float(np.mean(totals))

    def save(self, leader_path: str, follower_path: str) -> None:
        meta = {
            "env_config": self.env_config.to_dict(),
            "train_config": asdict(self.cfg),
            "global_timestep": self.global_step,
        }
        save_checkpoint(leader_path, self.models["leader"], {**meta, "agent": "leader"})
        save_checkpoint(follower_path, self.models["follower"], {**meta, "agent": "follower"})


def random_baseline(env_config: EnvConfig, n_episodes: int = 16, horizon: int = 128,
                    seed: int = 10_000_000) -> float:
    """Reference score of two uniform-random agents under the same protocol."""
    report = engine_evaluate(
        env_config, "random", "random", n_envs=1, horizon=horizon,
        n_seeds=n_episodes, base_seed=seed,
    )
    return report.mean_sum_reward
