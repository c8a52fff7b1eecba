"""Reward functions: opposite-goal / target-goal embedding rewards, the
survival+speed baseline, the constant-survival baseline, and weighted
composition.  Also the per-episode computer that turns simulator states
into reward values for a configured spec."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .embeddings import GoalSpec, reference_backend
from .errors import ConfigurationError, InputError
from .observations import compute_ttc, describe_text
from .rendering import FrameBuffer, render_frame, stack_video
from .simulation import StepOutcome, WorldState

SURVIVAL_REWARD = 0.2
SPEED_RANGE = (20.0, 40.0)   # mapped linearly onto (0, 0.8)
SPEED_REWARD_SPAN = 0.8

REWARD_KINDS = ("opposite_goal", "target_goal", "speed_survival", "constant",
                "speed", "composite")


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"dim mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise InputError("cosine similarity undefined for zero-norm vectors")
    return float(np.dot(a, b) / (na * nb))


def opposite_goal_reward(obs_emb: np.ndarray, goal_emb: np.ndarray) -> float:
    """Cosine distance to the undesired goal embedding; range [0, 2]."""
    return 1.0 - cosine_similarity(obs_emb, goal_emb)


def target_goal_reward(obs_emb: np.ndarray, goal_emb: np.ndarray) -> float:
    """Cosine similarity to the desired goal embedding (ablation reward)."""
    return cosine_similarity(obs_emb, goal_emb)


def speed_term(ego_speed: float) -> float:
    lo, hi = SPEED_RANGE
    frac = min(max((ego_speed - lo) / (hi - lo), 0.0), 1.0)
    return SPEED_REWARD_SPAN * frac


def survival_speed_reward(ego_speed: float, crashed: bool) -> float:
    """Baseline reward: 0.2 survival constant plus speed mapped from
    (20, 40) m/s onto (0, 0.8); zero on the crash step."""
    if crashed:
        return 0.0
    return SURVIVAL_REWARD + speed_term(ego_speed)


def constant_reward(crashed: bool) -> float:
    return 0.0 if crashed else SURVIVAL_REWARD


def composite_reward(components: Sequence[Tuple[float, float]]) -> float:
    """Weighted sum over (value, weight) pairs."""
    if not components:
        raise InputError("composite reward needs at least one component")
    return float(sum(weight * value for value, weight in components))


@dataclass(frozen=True)
class RewardSpec:
    kind: str = "opposite_goal"
    modality: str = "text"
    polarity: str = "opposite"
    goal_text: Optional[str] = None
    components: Tuple[Tuple["RewardSpec", float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in REWARD_KINDS:
            raise ConfigurationError(
                f"unknown reward kind {self.kind!r}; expected one of {REWARD_KINDS}")
        if self.kind == "composite" and not self.components:
            raise ConfigurationError("composite reward spec needs components")

    def goal(self) -> GoalSpec:
        if self.goal_text is not None:
            return GoalSpec(modality=self.modality, goal_text=self.goal_text,
                            polarity=self.polarity)
        return GoalSpec.default(self.modality, self.polarity)

    @staticmethod
    def from_mapping(mapping: dict) -> "RewardSpec":
        """Build from a flat config-section mapping (strings)."""
        known = {"kind", "modality", "polarity", "goal_text", "speed_weight"}
        extra = set(mapping) - known
        if extra:
            raise ConfigurationError(f"unknown reward config keys: {sorted(extra)}")
        if "kind" not in mapping:
            raise ConfigurationError("reward config is missing the 'kind' field")
        kind = mapping["kind"]
        base = RewardSpec(
            kind=kind if kind != "composite" else "opposite_goal",
            modality=mapping.get("modality", "text"),
            polarity=mapping.get("polarity", "opposite"),
            goal_text=mapping.get("goal_text"),
        )
        weight = float(mapping.get("speed_weight", 0.0))
        if kind == "composite" or weight > 0.0:
            return RewardSpec(kind="composite", modality=base.modality,
                              components=((base, 1.0),
                                          (RewardSpec(kind="speed"), weight or 1.0)))
        return base


class RewardComputer:
    """Stateful per-episode reward evaluator for one RewardSpec.

    Embedding-based kinds lazily build their goal embedding once and keep a
    frame buffer across steps for the video modality.
    """

    def __init__(self, spec: RewardSpec, backend=None):
        self.spec = spec
        self._children = [
            (RewardComputer(child, backend=backend), weight)
            for child, weight in spec.components
        ]
        self._backend = None
        self._goal_emb = None
        self._buffer: Optional[FrameBuffer] = None
        if spec.kind in ("opposite_goal", "target_goal"):
            self._backend = backend or reference_backend(spec.modality)
            self._goal_emb = self._backend.embed_goal(spec.goal())
            if spec.modality == "video":
                self._buffer = FrameBuffer()

    @property
    def needs_frames(self) -> bool:
        return (self.spec.modality == "video"
                and self.spec.kind in ("opposite_goal", "target_goal")) \
            or any(child.needs_frames for child, _ in self._children)

    def reset(self) -> None:
        if self._buffer is not None:
            self._buffer.clear()
        for child, _ in self._children:
            child.reset()

    def observe(self, world: WorldState) -> object:
        """Build this spec's observation for the current world."""
        if self.spec.modality == "text":
            return describe_text(compute_ttc(world))
        if self.spec.modality == "image":
            return render_frame(world)
        if self.spec.modality == "video":
            return stack_video(self._buffer)
        raise ConfigurationError(f"unknown modality {self.spec.modality!r}")

    def step_reward(self, outcome: StepOutcome) -> float:
        kind = self.spec.kind
        if kind == "composite":
            return composite_reward([
                (child.step_reward(outcome), weight) for child, weight in self._children
            ])
        if kind == "speed_survival":
            return survival_speed_reward(outcome.ego_speed, outcome.collided)
        if kind == "constant":
            return constant_reward(outcome.collided)
        if kind == "speed":
            return speed_term(outcome.ego_speed)
        if self._buffer is not None:
            if outcome.frames:
                self._buffer.extend(outcome.frames)
            else:
                self._buffer.push(render_frame(outcome.world))
        obs_emb = self._backend.embed_observation(self.observe(outcome.world))
        if kind == "opposite_goal":
            return opposite_goal_reward(obs_emb, self._goal_emb)
        return target_goal_reward(obs_emb, self._goal_emb)
