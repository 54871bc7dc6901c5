"""Configuration dataclasses for the ColorGrid environment.

All configs are frozen and validate themselves on construction, so any
object that reaches the engine is already known to be feasible.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Any

N_COLORS = 3

# Training-timestep window over which the incorrect-block penalty ramps 0 -> 1.
DEFAULT_ANNEAL_START = 4_000_000
DEFAULT_ANNEAL_END = 10_000_000


class ConfigError(ValueError):
    """Invalid or infeasible environment configuration."""


@dataclass(frozen=True)
class DistanceShapingConfig:
    """Constant penalty while leader and follower are closer than `threshold`.

    The comparison is strict: a pair exactly at `threshold` Manhattan distance
    incurs no penalty. The penalty lands on the reward of the role named in
    `applies_to`. `active_until`, if set, drops the term once the global
    training timestep reaches that value.
    """

    threshold: int = 10
    penalty: float = 0.25
    applies_to: str = "follower"
    active_until: int | None = None

    def __post_init__(self):
        if self.threshold < 0:
            raise ConfigError(f"distance threshold must be >= 0, got {self.threshold}")
        if self.penalty < 0:
            raise ConfigError(f"distance penalty must be >= 0, got {self.penalty}")
        if self.applies_to not in ("leader", "follower"):
            raise ConfigError(f"applies_to must be 'leader' or 'follower', got {self.applies_to!r}")


@dataclass(frozen=True)
class PotentialFieldConfig:
    """Dense field reward: goal blocks attract, incorrect blocks repel.

    Each block within `radius` Manhattan distance contributes
    sign * scale / max(1, distance). When `scale` is None it defaults to
    0.1 * reward_goal / (4 * radius), which makes the worst-case field on an
    unbounded grid exactly one tenth of the goal-collection reward; the field
    is additionally clamped to that bound so a hand-picked scale can never
    dominate block collection.
    """

    scale: float | None = None
    radius: int = 10

    def __post_init__(self):
        if self.radius < 1:
            raise ConfigError(f"potential field radius must be >= 1, got {self.radius}")


@dataclass(frozen=True)
class ShapingConfig:
    """Reward-shaping switches: penalty annealing, distance penalty, potential field.

    Annealing is disabled unless both endpoints are set (the conventional
    window is timesteps 4M to 10M, exposed as DEFAULT_ANNEAL_START/END).
    """

    anneal_start: int | None = None
    anneal_end: int | None = None
    distance: DistanceShapingConfig | None = None
    potential_field: PotentialFieldConfig | None = None

    def __post_init__(self):
        if (self.anneal_start is None) != (self.anneal_end is None):
            raise ConfigError("anneal_start and anneal_end must be set together")
        if self.anneal_start is not None:
            if self.anneal_start < 0:
                raise ConfigError(f"anneal_start must be >= 0, got {self.anneal_start}")
            if self.anneal_start > self.anneal_end:
                raise ConfigError(
                    f"anneal_start ({self.anneal_start}) > anneal_end ({self.anneal_end})"
                )

    @property
    def annealing_enabled(self) -> bool:
        return self.anneal_start is not None


@dataclass(frozen=True)
class RewardPreset:
    """Named (reward_goal, reward_incorrect) pair fixing the cost of exploration."""

    name: str
    reward_goal: float
    reward_incorrect: float


# Sign of the expected value of collecting a uniformly random block:
# optimistic +, neutral 0, pessimistic -.
REWARD_PRESETS: dict[str, RewardPreset] = {
    "optimistic": RewardPreset("optimistic", 4.0, -1.0),
    "neutral": RewardPreset("neutral", 2.0, -1.0),
    "pessimistic": RewardPreset("pessimistic", 1.0, -1.0),
}

# Shaping presets used for warmstart-style training runs: distance penalty on
# the leader plus a late annealing window.
WARMSTART_SHAPING_PRESETS: dict[str, ShapingConfig] = {
    "warmstart_short": ShapingConfig(
        anneal_start=10_000_000,
        anneal_end=20_000_000,
        distance=DistanceShapingConfig(
            threshold=10, penalty=0.25, applies_to="leader", active_until=20_000_000
        ),
    ),
    "warmstart_long": ShapingConfig(
        anneal_start=4_000_000,
        anneal_end=10_000_000,
        distance=DistanceShapingConfig(
            threshold=10, penalty=0.5, applies_to="leader", active_until=40_000_000
        ),
    ),
}


@dataclass(frozen=True)
class EnvConfig:
    """Complete parameterization of one environment instance.

    `goal_resample_probability` is the chance per step that the goal color is
    redrawn uniformly from all three colors, so the chance the goal actually
    changes is 2/3 of it (~2.08% at the 1/32 default).
    """

    width: int = 32
    height: int = 32
    block_density: float = 0.10
    goal_resample_probability: float = 1 / 32
    reward_goal: float = 1.0
    reward_incorrect: float = -1.0
    asymmetric: bool = False
    num_leaders: int = 1
    num_followers: int = 1
    shaping: ShapingConfig = field(default_factory=ShapingConfig)
    seed: int = 0
    view_radius: int | None = None  # egocentric crop radius; None = full view
    role_relative_obs: bool = False  # agent planes as self/other instead of leader/follower

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if not 0.0 < self.block_density < 1.0:
            raise ConfigError(f"block_density must be in (0, 1), got {self.block_density}")
        if not 0.0 <= self.goal_resample_probability <= 1.0:
            raise ConfigError(
                f"goal_resample_probability must be in [0, 1], got {self.goal_resample_probability}"
            )
        if self.reward_goal <= 0:
            raise ConfigError(f"reward_goal must be > 0, got {self.reward_goal}")
        if self.reward_incorrect >= 0:
            raise ConfigError(f"reward_incorrect must be < 0, got {self.reward_incorrect}")
        if self.num_leaders < 1 or self.num_followers < 1:
            raise ConfigError("need at least one leader and one follower")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.view_radius is not None and self.view_radius < 1:
            raise ConfigError(f"view_radius must be >= 1, got {self.view_radius}")
        if self.block_density * self.n_cells < N_COLORS:
            raise ConfigError(
                f"density {self.block_density} on {self.width}x{self.height} yields fewer "
                f"than {N_COLORS} blocks"
            )
        # one empty cell must always remain for respawn
        if self.total_blocks + self.n_agents >= self.n_cells:
            raise ConfigError(
                f"{self.total_blocks} blocks + {self.n_agents} agents do not fit on "
                f"{self.width}x{self.height} with an empty cell to spare"
            )

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def n_agents(self) -> int:
        return self.num_leaders + self.num_followers

    @property
    def total_blocks(self) -> int:
        """floor(density * cells), rounded down to a multiple of 3."""
        return int(self.block_density * self.n_cells) // N_COLORS * N_COLORS

    @property
    def blocks_per_color(self) -> int:
        return self.total_blocks // N_COLORS

    def with_preset(self, preset: str | RewardPreset) -> "EnvConfig":
        if isinstance(preset, str):
            try:
                preset = REWARD_PRESETS[preset]
            except KeyError:
                raise ConfigError(
                    f"unknown reward preset {preset!r}; valid: {sorted(REWARD_PRESETS)}"
                ) from None
        return replace(
            self, reward_goal=preset.reward_goal, reward_incorrect=preset.reward_incorrect
        )

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict[str, Any]) -> "EnvConfig":
        d = dict(d)
        sh = d.pop("shaping", None) or {}
        dist = sh.get("distance")
        pf = sh.get("potential_field")
        shaping = ShapingConfig(
            anneal_start=sh.get("anneal_start"),
            anneal_end=sh.get("anneal_end"),
            distance=DistanceShapingConfig(**dist) if dist else None,
            potential_field=PotentialFieldConfig(**pf) if pf else None,
        )
        return EnvConfig(shaping=shaping, **d)
