"""Built-in deterministic encoders.

Text: FNV-1a hashed unigram+bigram counts folded into a fixed-width vector.
Image: per-channel 16x16 average pooling of a 224x224 RGB frame, mean
subtracted and L2 normalized.  Video: mean of the per-frame vectors,
renormalized.  Goal sentences for the visual modalities are grounded in
synthetic exemplar rasters (two cars overlapping for the collision goal,
well separated for the safe-driving goal).
"""

from __future__ import annotations

import re

import numpy as np

TEXT_DIM = 4096
IMAGE_DIM = 768
POOL_GRID = 16
FRAME_SIZE = 224

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:\.[0-9][a-z0-9]*)*")


def fnv1a64(text: str) -> int:
    value = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        value = ((value ^ byte) * _FNV_PRIME) & _MASK64
    return value


def tokenize(text: str):
    words = _TOKEN_RE.findall(text.lower())
    return words + [" ".join(pair) for pair in zip(words, words[1:])]


def embed_text(text: str) -> np.ndarray:
    tokens = tokenize(text)
    if not tokens:
        raise ValueError("cannot embed empty text")
    vec = np.zeros(TEXT_DIM)
    for token in tokens:
        vec[fnv1a64(token) % TEXT_DIM] += 1.0
    return vec / np.linalg.norm(vec)


def embed_image(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.shape != (FRAME_SIZE, FRAME_SIZE, 3):
        raise ValueError(f"expected a {FRAME_SIZE}x{FRAME_SIZE}x3 frame, got {frame.shape}")
    cell = FRAME_SIZE // POOL_GRID
    pooled = frame.astype(np.float64).reshape(
        POOL_GRID, cell, POOL_GRID, cell, 3).mean(axis=(1, 3))
    vec = pooled.reshape(-1)
    vec = vec - vec.mean()
    return vec / np.linalg.norm(vec)


def embed_video(frames) -> np.ndarray:
    frames = np.asarray(frames)
    if frames.ndim != 4 or frames.shape[0] < 1:
        raise ValueError(f"expected a (n, h, w, 3) clip, got {frames.shape}")
    mean = np.mean([embed_image(f) for f in frames], axis=0)
    return mean / np.linalg.norm(mean)


# ---------------------------------------------------------------------------
# Exemplar rasters grounding the visual goal sentences.

_BACKGROUND = (15, 15, 15)
_WHITE_CAR = (255, 255, 255)
_BLUE_CAR = (40, 70, 255)
_CAR_H, _CAR_W = 20, 50      # pixels; 2 m x 5 m at 10 px/m


def _blank_frame() -> np.ndarray:
    frame = np.empty((FRAME_SIZE, FRAME_SIZE, 3), dtype=np.uint8)
    frame[:] = _BACKGROUND
    return frame


def _paint_car(frame, cx, cy, color) -> None:
    y0, y1 = cy - _CAR_H // 2, cy + _CAR_H // 2
    x0, x1 = cx - _CAR_W // 2, cx + _CAR_W // 2
    frame[max(y0, 0):y1, max(x0, 0):x1] = color


def collision_exemplar() -> np.ndarray:
    """White car and blue car overlapping at the frame center."""
    frame = _blank_frame()
    center = FRAME_SIZE // 2
    _paint_car(frame, center + 20, center + 6, _BLUE_CAR)
    _paint_car(frame, center, center, _WHITE_CAR)
    return frame


def cruising_exemplar() -> np.ndarray:
    """White car driving with the blue car at a comfortable distance."""
    frame = _blank_frame()
    center = FRAME_SIZE // 2
    _paint_car(frame, center, center, _WHITE_CAR)
    _paint_car(frame, center + 90, center - 40, _BLUE_CAR)
    return frame


def visual_goal_frame(goal_text: str) -> np.ndarray:
    """Raster standing in for a visual-modality goal sentence."""
    if "collid" in goal_text.lower() or "collision" in goal_text.lower():
        return collision_exemplar()
    return cruising_exemplar()
