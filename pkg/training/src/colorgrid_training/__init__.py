"""Parallel-env binding and desk-scale IPPO reference trainer."""

from .adapter import ParallelEnvAdapter
from .nets import ActorCritic, ShapeError, flat_dim
from .ppo import (
    IPPOTrainer,
    Rollout,
    TrainingConfig,
    TrainingDiverged,
    aux_cross_entropy,
    compute_gae,
    load_checkpoint,
    ppo_loss,
    random_baseline,
    save_checkpoint,
)
from .spaces import Box, DictSpace, Discrete

__version__ = "0.1.0"
