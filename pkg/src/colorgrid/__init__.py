"""ColorGrid: a non-stationary hidden-goal grid world for cooperative MARL."""

from .config import (
    ConfigError,
    DistanceShapingConfig,
    EnvConfig,
    PotentialFieldConfig,
    REWARD_PRESETS,
    RewardPreset,
    ShapingConfig,
    WARMSTART_SHAPING_PRESETS,
)
from .env import (
    Action,
    Collection,
    EnvError,
    GridState,
    StepOutcome,
    child_seed,
    copy_state,
    maybe_switch_goal,
    reset,
    respawn_block,
    state_hash,
    step,
)
from .observation import Observation, decode, encode
from .agents import (
    AStarFollowerPolicy,
    AStarLeaderPolicy,
    FollowerBelief,
    POLICY_NAMES,
    RandomPolicy,
    astar_follower_act,
    astar_leader_act,
    astar_path,
    make_policy,
    random_act,
)
from .rollout import (
    EpisodeMetrics,
    EvalReport,
    TrajectoryError,
    TrajectoryRecord,
    TrajectoryStep,
    VecEnv,
    build_policies,
    evaluate,
    measure_throughput,
    read_trajectory,
    record_episode,
    replay,
    run_episode,
    verify_replay,
    write_trajectory,
)
from . import shaping

__version__ = "0.1.0"
