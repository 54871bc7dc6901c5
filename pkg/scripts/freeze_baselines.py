#!/usr/bin/env python3
"""Regenerate the frozen baseline regression numbers used by the acceptance suite.

Runs the scripted baselines under the reference evaluation protocol
(neutral preset, default density and switch probability, 100 seeds x 128
steps) and writes the exact means to tests/data/baseline_regression.json.
Only rerun this when the engine's declared RNG protocol or the baseline
policies intentionally change; the acceptance suite asserts equality with
these numbers.
"""

import json
import pathlib
import sys

from colorgrid import EnvConfig, evaluate

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "baseline_regression.json"

PROTOCOL = dict(n_envs=1, n_seeds=100, horizon=128, base_seed=0)


def main() -> int:
    config = EnvConfig().with_preset("neutral")
    astar = evaluate(config, "astar_leader", "astar_copier", **PROTOCOL)
    rand = evaluate(config, "random", "random", **PROTOCOL)
    payload = {
        "protocol": {**PROTOCOL, "preset": "neutral", "width": 32, "height": 32,
                     "block_density": 0.10, "goal_resample_probability": 1 / 32},
        "astar_pair": {
            "mean_sum_reward": astar.mean_sum_reward,
            "std_sum_reward": astar.std_sum_reward,
            "leader_mean_reward": astar.per_agent_mean[0],
            "follower_mean_reward": astar.per_agent_mean[1],
            "goal_collections": astar.goal_collections,
            "incorrect_collections": astar.incorrect_collections,
        },
        "random_pair": {
            "mean_sum_reward": rand.mean_sum_reward,
            "std_sum_reward": rand.std_sum_reward,
            "goal_collections": rand.goal_collections,
            "incorrect_collections": rand.incorrect_collections,
        },
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote {OUT}")
    print(f"astar pair : mean={astar.mean_sum_reward:.4f} std={astar.std_sum_reward:.4f} "
          f"leader={astar.per_agent_mean[0]:.4f} follower={astar.per_agent_mean[1]:.4f}")
    print(f"random pair: mean={rand.mean_sum_reward:.4f} std={rand.std_sum_reward:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
