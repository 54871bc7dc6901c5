"""Command-line front door: evaluate baselines, replay trajectories, benchmark.

Config precedence is built-in defaults < config file < command-line flags.
The config file is flat ``key = value`` text whose keys mirror flag names
(``density = 0.05``, ``switch-prob = 0.02``); file entries are replayed as
synthetic flags ahead of the real ones so ordinary argparse rules resolve
the precedence. Every run emits a header record carrying the fully resolved
config and seed, sufficient to reproduce it exactly.
"""

from __future__ import annotations

import argparse
import secrets
import sys
import time

from .agents import POLICY_NAMES
from .config import (
    ConfigError,
    DistanceShapingConfig,
    EnvConfig,
    PotentialFieldConfig,
    REWARD_PRESETS,
    ShapingConfig,
)
from .render import render_frame
from .rollout import (
    TrajectoryError,
    emit_record,
    evaluate,
    measure_throughput,
    read_trajectory,
    record_episode,
    replay,
    write_trajectory,
)


def _add_env_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("environment")
    group.add_argument("--width", type=int, default=32)
    group.add_argument("--height", type=int, default=32)
    group.add_argument("--density", type=float, default=0.10, help="block density in (0, 1)")
    group.add_argument(
        "--preset",
        choices=sorted(REWARD_PRESETS),
        default="neutral",
        help="reward preset fixing the cost of exploration",
    )
    group.add_argument(
        "--switch-prob",
        type=float,
        default=1 / 32,
        help="per-step probability that the goal color is resampled (default 1/32)",
    )
    group.add_argument("--asymmetric", action="store_true", help="hide the goal from the follower")
    group.add_argument("--anneal-start", type=int, default=None)
    group.add_argument("--anneal-end", type=int, default=None)
    group.add_argument("--distance-threshold", type=int, default=None)
    group.add_argument("--distance-penalty", type=float, default=None)
    group.add_argument(
        "--potential-field",
        type=float,
        default=None,
        metavar="SCALE",
        help="enable potential-field shaping with the given scale",
    )
    group.add_argument("--seed", type=int, default=None, help="base seed; drawn and printed if absent")


def _config_from_args(args: argparse.Namespace) -> EnvConfig:
    distance = None
    if args.distance_threshold is not None or args.distance_penalty is not None:
        distance = DistanceShapingConfig(
            threshold=args.distance_threshold if args.distance_threshold is not None else 10,
            penalty=args.distance_penalty if args.distance_penalty is not None else 0.25,
        )
    field = None
    if args.potential_field is not None:
        field = PotentialFieldConfig(scale=args.potential_field)
    shaping = ShapingConfig(
        anneal_start=args.anneal_start,
        anneal_end=args.anneal_end,
        distance=distance,
        potential_field=field,
    )
    preset = REWARD_PRESETS[args.preset]
    return EnvConfig(
        width=args.width,
        height=args.height,
        block_density=args.density,
        goal_resample_probability=args.switch_prob,
        reward_goal=preset.reward_goal,
        reward_incorrect=preset.reward_incorrect,
        asymmetric=args.asymmetric,
        shaping=shaping,
        seed=args.seed if args.seed is not None else 0,
    )


def _resolve_seed(args: argparse.Namespace, out) -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(32)
    emit_record({"kind": "seed_drawn", "seed": seed}, out)
    return seed


def _emit_header(command: str, config: EnvConfig, seed: int, out, **extra) -> None:
    record = {"kind": "header", "command": command, "seed": seed, "config": config.to_dict()}
    record.update(extra)
    emit_record(record, out)


def cmd_evaluate(args: argparse.Namespace, out) -> int:
    seed = _resolve_seed(args, out)
    config = _config_from_args(args)
    _emit_header(
        "evaluate",
        config,
        seed,
        out,
        leader=args.leader,
        follower=args.follower,
        n_envs=args.envs,
        n_seeds=args.seeds,
        horizon=args.horizon,
    )
    report = evaluate(
        config,
        leader_policy=args.leader,
        follower_policy=args.follower,
        n_envs=args.envs,
        horizon=args.horizon,
        n_seeds=args.seeds,
        base_seed=seed,
    )
    emit_record({"kind": "eval_summary", **report.to_dict()}, out)
    if args.record:
        record, _ = record_episode(
            config, seed, args.leader, args.follower, horizon=args.horizon
        )
        write_trajectory(record, args.record)
        emit_record({"kind": "trajectory_written", "path": args.record, "steps": len(record.steps)}, out)
    return 0


def cmd_replay(args: argparse.Namespace, out) -> int:
    path = args.path or args.replay
    if not path:
        raise SystemExit("replay: a trajectory path is required (positional or --replay)")
    record = read_trajectory(path)
    _emit_header(
        "replay", record.config, record.seed, out, path=path, policies=record.policies,
        n_steps=len(record.steps),
    )
    color = args.color if args.color is not None else out.isatty()
    shown = 0
    for index, (state, entry) in enumerate(replay(record)):
        if args.step is not None and index != args.step:
            continue
        out.write(render_frame(state, color=color) + "\n\n")
        shown += 1
        if args.delay and args.step is None:
            out.flush()
            time.sleep(args.delay)
    if args.step is not None and shown == 0:
        raise SystemExit(
            f"replay: --step {args.step} out of range, record has {len(record.steps)} steps"
        )
    return 0


def cmd_bench(args: argparse.Namespace, out) -> int:
    seed = _resolve_seed(args, out)
    config = _config_from_args(args)
    _emit_header("bench", config, seed, out, n_envs=args.envs, horizon=args.horizon)
    report = measure_throughput(config, n_envs=args.envs, horizon=args.horizon, base_seed=seed)
    emit_record({"kind": "throughput", **report.to_dict()}, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colorgrid",
        description="Hidden-goal grid world: baseline evaluation, replay, and benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="run a policy pair and report net reward")
    _add_env_flags(p_eval)
    p_eval.add_argument("--leader", choices=POLICY_NAMES, default="astar_leader")
    p_eval.add_argument("--follower", choices=POLICY_NAMES, default="astar_copier")
    p_eval.add_argument("--seeds", type=int, default=1, help="number of seed batches")
    p_eval.add_argument("--envs", type=int, default=16, help="environments per batch")
    p_eval.add_argument("--horizon", type=int, default=128)
    p_eval.add_argument("--record", metavar="PATH", help="also record the first episode to PATH")
    p_eval.set_defaults(func=cmd_evaluate)

    p_replay = sub.add_parser("replay", help="render a recorded trajectory as ASCII frames")
    p_replay.add_argument("path", nargs="?", help="trajectory file")
    p_replay.add_argument("--replay", metavar="PATH", help="trajectory file (alias for the positional)")
    p_replay.add_argument("--step", type=int, default=None, help="print only this frame")
    p_replay.add_argument("--delay", type=float, default=0.0, help="seconds between frames")
    p_replay.add_argument(
        "--color", action=argparse.BooleanOptionalAction, default=None,
        help="highlight the goal color (default: only on a terminal)",
    )
    p_replay.set_defaults(func=cmd_replay)

    p_bench = sub.add_parser("bench", help="measure env steps per second with random policies")
    _add_env_flags(p_bench)
    p_bench.add_argument("--envs", type=int, default=1)
    p_bench.add_argument("--horizon", type=int, default=100_000, help="steps per environment")
    p_bench.set_defaults(func=cmd_bench)

    for p in (p_eval, p_replay, p_bench):
        p.add_argument("--config", metavar="FILE", help="flat key=value config file")
    return parser


def _load_config_file(path: str) -> list[str]:
    """Turn a flat key=value file into synthetic argv entries."""
    argv: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, value = (part.strip() for part in line.split("=", 1))
            else:
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise SystemExit(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
                key, value = parts[0], parts[1].strip()
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "false"):
                if value.lower() == "true":
                    argv.append(flag)
            else:
                argv.extend([flag, value])
    return argv


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    # pull --config out first so file entries can be replayed ahead of real flags
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        insert_at = 1 if argv and not argv[0].startswith("-") else 0
        argv = argv[:insert_at] + _load_config_file(known.config) + argv[insert_at:]

    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "horizon", 1) < 1:
        parser.error(f"--horizon must be >= 1, got {args.horizon}")
    if getattr(args, "envs", 1) < 1:
        parser.error(f"--envs must be >= 1, got {args.envs}")
    if getattr(args, "seeds", 1) < 1:
        parser.error(f"--seeds must be >= 1, got {args.seeds}")
    try:
        return args.func(args, sys.stdout)
    except (ConfigError, TrajectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
