"""Embedding backends for observations and goals.

Reference backends are deterministic, dependency-free stand-ins (hashed
token counts for text, pooled pixel statistics for images/videos) so the
whole reward pipeline runs hermetically.  The remote backend delegates to
the embedding-inference service over HTTP.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional

import numpy as np

from .config import EnvConfig
from .errors import InputError, InterfaceError
from .rendering import CLIP_LENGTH, FRAME_SIZE, render_frame
from .simulation import VehicleState, WorldState

Modality = Literal["text", "image", "video"]
Polarity = Literal["opposite", "target"]

TEXT_DIM = 4096
IMAGE_DIM = 768
POOL_GRID = 16

OPPOSITE_TEXT_GOAL = "A collision is happening."
OPPOSITE_VISUAL_GOAL = "White car collides with a blue car."
TARGET_TEXT_GOAL = "Ego is driving safely."
TARGET_VISUAL_GOAL = "White car drives safely."


@dataclass(frozen=True)
class GoalSpec:
    modality: Modality
    goal_text: str
    polarity: Polarity = "opposite"

    @staticmethod
    def default(modality: Modality, polarity: Polarity = "opposite") -> "GoalSpec":
        if modality == "text":
            text = OPPOSITE_TEXT_GOAL if polarity == "opposite" else TARGET_TEXT_GOAL
        elif modality in ("image", "video"):
            text = OPPOSITE_VISUAL_GOAL if polarity == "opposite" else TARGET_VISUAL_GOAL
        else:
            raise InterfaceError(f"unknown modality {modality!r}")
        return GoalSpec(modality=modality, goal_text=text, polarity=polarity)


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    modality: Modality
    dim: int
    kind: Literal["reference", "remote"]


# ---------------------------------------------------------------------------
# Text reference backend: hashed token counts.

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:\.[0-9][a-z0-9]*)*")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def tokenize(text: str) -> List[str]:
    """Lowercased word unigrams plus adjacent bigrams; punctuation stripped
    except decimal points inside numbers."""
    unigrams = _TOKEN_RE.findall(text.lower())
    bigrams = [f"{a} {b}" for a, b in zip(unigrams, unigrams[1:])]
    return unigrams + bigrams


def embed_text_ref(text: str) -> np.ndarray:
    if not text or not text.strip():
        raise InputError("cannot embed empty text")
    vec = np.zeros(TEXT_DIM)
    for token in tokenize(text):
        vec[fnv1a64(token) % TEXT_DIM] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise InputError(f"text produced no tokens: {text!r}")
    return vec / norm


def sparse_text_cosine(a: str, b: str) -> float:
    """Exact token-count cosine, the independent oracle for embed_text_ref."""
    from collections import Counter

    ca, cb = Counter(tokenize(a)), Counter(tokenize(b))
    dot = sum(ca[t] * cb[t] for t in ca)
    na = math.sqrt(sum(v * v for v in ca.values()))
    nb = math.sqrt(sum(v * v for v in cb.values()))
    return dot / (na * nb)


# ---------------------------------------------------------------------------
# Image / video reference backends: pooled pixel statistics.

def embed_image_ref(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.shape != (FRAME_SIZE, FRAME_SIZE, 3):
        raise InputError(f"expected ({FRAME_SIZE}, {FRAME_SIZE}, 3) frame, got {frame.shape}")
    block = FRAME_SIZE // POOL_GRID
    pooled = frame.astype(np.float64).reshape(
        POOL_GRID, block, POOL_GRID, block, 3).mean(axis=(1, 3))
    vec = pooled.reshape(-1)
    vec = vec - vec.mean()
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise InputError("uniform frame has no embeddable structure")
    return vec / norm


def embed_video_ref(clip: np.ndarray) -> np.ndarray:
    clip = np.asarray(clip)
    if clip.shape[0] != CLIP_LENGTH:
        raise InputError(f"expected {CLIP_LENGTH}-frame clip, got {clip.shape[0]}")
    mean = np.mean([embed_image_ref(frame) for frame in clip], axis=0)
    norm = float(np.linalg.norm(mean))
    if norm == 0.0:
        raise InputError("degenerate clip embedding")
    return mean / norm


# ---------------------------------------------------------------------------
# Canonical rendered exemplars for visual goal embeddings.

def _exemplar_world(colliding: bool) -> WorldState:
    cfg = EnvConfig(duration=1, spawn_count=0)
    lane = 1
    ego = VehicleState(id=0, lane_index=lane, x=0.0, y=cfg.lane_center(lane),
                       speed=25.0, target_lane=lane, is_ego=True)
    if colliding:
        npc = VehicleState(id=1, lane_index=lane, x=2.5, y=cfg.lane_center(lane) + 0.5,
                           speed=20.0, target_lane=lane)
    else:
        npc = VehicleState(id=1, lane_index=lane, x=60.0, y=cfg.lane_center(lane),
                           speed=25.0, target_lane=lane)
    return WorldState(vehicles=[ego, npc], step_index=0,
                      rng=np.random.default_rng(0), config=cfg)


def collision_exemplar_frame() -> np.ndarray:
    """Two overlapping glyphs, white on blue: the rendered undesired state."""
    return render_frame(_exemplar_world(colliding=True))


def cruising_exemplar_frame() -> np.ndarray:
    return render_frame(_exemplar_world(colliding=False))


# ---------------------------------------------------------------------------
# Backend objects.

class ReferenceTextBackend:
    descriptor = BackendDescriptor("ref-text", "text", TEXT_DIM, "reference")

    def __init__(self) -> None:
        self._memo: Dict[str, np.ndarray] = {}

    def embed_observation(self, text: str) -> np.ndarray:
        cached = self._memo.get(text)
        if cached is None:
            cached = embed_text_ref(text)
            self._memo[text] = cached
        return cached

    def embed_goal(self, goal: GoalSpec) -> np.ndarray:
        _require_modality(self.descriptor, goal)
        return self.embed_observation(goal.goal_text)


class ReferenceImageBackend:
    descriptor = BackendDescriptor("ref-image", "image", IMAGE_DIM, "reference")

    def embed_observation(self, frame: np.ndarray) -> np.ndarray:
        return embed_image_ref(frame)

    def embed_goal(self, goal: GoalSpec) -> np.ndarray:
        _require_modality(self.descriptor, goal)
        frame = (collision_exemplar_frame() if goal.polarity == "opposite"
                 else cruising_exemplar_frame())
        return embed_image_ref(frame)


class ReferenceVideoBackend:
    descriptor = BackendDescriptor("ref-video", "video", IMAGE_DIM, "reference")

    def embed_observation(self, clip: np.ndarray) -> np.ndarray:
        return embed_video_ref(clip)

    def embed_goal(self, goal: GoalSpec) -> np.ndarray:
        _require_modality(self.descriptor, goal)
        frame = (collision_exemplar_frame() if goal.polarity == "opposite"
                 else cruising_exemplar_frame())
        return embed_image_ref(frame)


def _require_modality(descriptor: BackendDescriptor, goal: GoalSpec) -> None:
    if descriptor.modality != goal.modality:
        raise InterfaceError(
            f"backend {descriptor.name!r} ({descriptor.modality}) cannot embed "
            f"a {goal.modality} goal")


def embed_goal(backend, goal: GoalSpec) -> np.ndarray:
    return backend.embed_goal(goal)


def reference_backend(modality: Modality):
    if modality == "text":
        return ReferenceTextBackend()
    if modality == "image":
        return ReferenceImageBackend()
    if modality == "video":
        return ReferenceVideoBackend()
    raise InterfaceError(f"unknown modality {modality!r}")
