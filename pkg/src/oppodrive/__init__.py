"""Closed-loop highway driving RL with embedding-distance rewards computed
against an undesired linguistic goal."""

__version__ = "0.1.0"

from .config import EnvConfig, load_env_config, load_run_config
from .simulation import MetaAction, StepOutcome, VehicleState, WorldState, reset, step
from .rewards import (RewardSpec, cosine_similarity, opposite_goal_reward,
                      target_goal_reward, survival_speed_reward, constant_reward,
                      composite_reward)
from .embeddings import GoalSpec, reference_backend

__all__ = [
    "EnvConfig", "load_env_config", "load_run_config",
    "MetaAction", "StepOutcome", "VehicleState", "WorldState", "reset", "step",
    "RewardSpec", "cosine_similarity", "opposite_goal_reward", "target_goal_reward",
    "survival_speed_reward", "constant_reward", "composite_reward",
    "GoalSpec", "reference_backend",
]
