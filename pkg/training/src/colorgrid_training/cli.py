"""Training front door: desk-scale IPPO runs over the grid-world engine."""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from colorgrid import EnvConfig, REWARD_PRESETS, ShapingConfig

from .ppo import IPPOTrainer, TrainingConfig, random_baseline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colorgrid-train",
        description="Train independent PPO leader/follower agents.",
    )
    env = parser.add_argument_group("environment")
    env.add_argument("--width", type=int, default=8)
    env.add_argument("--height", type=int, default=8)
    env.add_argument("--density", type=float, default=0.10)
    env.add_argument("--preset", choices=sorted(REWARD_PRESETS), default="neutral")
    env.add_argument("--switch-prob", type=float, default=0.0)
    env.add_argument("--asymmetric", action="store_true")
    env.add_argument("--anneal-start", type=int, default=None)
    env.add_argument("--anneal-end", type=int, default=None)

    train = parser.add_argument_group("training")
    train.add_argument("--total-timesteps", type=int, default=500_000)
    train.add_argument("--lr", type=float, default=TrainingConfig.learning_rate)
    train.add_argument("--n-envs", type=int, default=TrainingConfig.n_envs)
    train.add_argument("--rollout-steps", type=int, default=TrainingConfig.rollout_steps)
    train.add_argument("--kappa", type=float, default=TrainingConfig.aux_coef)
    train.add_argument("--goal-concat", choices=("early", "late"),
                       default=TrainingConfig.goal_concat)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--device", default="cpu")
    train.add_argument("--eval-every", type=int, default=20, metavar="UPDATES")
    train.add_argument("--frozen-leader", metavar="CKPT",
                       help="load a leader checkpoint and train only the follower")
    train.add_argument("--warmstart-follower", metavar="CKPT",
                       help="initialize the follower from a checkpoint")
    train.add_argument("--out-prefix", default="colorgrid_agent",
                       help="checkpoint path prefix ({prefix}_leader.pt / _follower.pt)")
    train.add_argument("--log", metavar="PATH", help="metric log file (JSONL); default stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    preset = REWARD_PRESETS[args.preset]
    env_config = EnvConfig(
        width=args.width,
        height=args.height,
        block_density=args.density,
        goal_resample_probability=args.switch_prob,
        reward_goal=preset.reward_goal,
        reward_incorrect=preset.reward_incorrect,
        asymmetric=args.asymmetric,
        shaping=ShapingConfig(anneal_start=args.anneal_start, anneal_end=args.anneal_end),
    )
    cfg = TrainingConfig(
        learning_rate=args.lr,
        n_envs=args.n_envs,
        rollout_steps=args.rollout_steps,
        aux_coef=args.kappa,
        goal_concat=args.goal_concat,
        total_timesteps=args.total_timesteps,
        seed=args.seed,
        device=args.device,
    )
    log_stream = open(args.log, "w") if args.log else sys.stdout
    try:
        trainer = IPPOTrainer(
            env_config, cfg, log_stream=log_stream,
            frozen_leader=args.frozen_leader,
            warmstart_follower=args.warmstart_follower,
        )
        trainer.train(eval_every=args.eval_every or None)
        score = trainer.evaluate_policies(n_episodes=32)
        baseline = random_baseline(env_config, n_episodes=32)
        trainer._log({"kind": "final_eval", "mean_sum_reward": score,
                      "random_baseline": baseline})
        trainer.save(f"{args.out_prefix}_leader.pt", f"{args.out_prefix}_follower.pt")
    finally:
        if args.log:
            log_stream.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
