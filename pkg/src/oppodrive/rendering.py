"""Top-down frame rendering and video clip assembly for the reward pipeline.

Frames are 224 x 224 RGB at 10 pixels per meter, centered on the ego
vehicle: white ego glyph, blue npc glyphs, red crashed glyphs, faint lane
markings on a uniform dark background.  Rendering is deterministic.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, List, Sequence

import numpy as np

from .simulation import WorldState

FRAME_SIZE = 224
PIXELS_PER_METER = 10.0
CLIP_LENGTH = 30

BACKGROUND = np.array([15, 15, 15], dtype=np.uint8)
LANE_MARKING = np.array([70, 70, 70], dtype=np.uint8)
EGO_COLOR = np.array([255, 255, 255], dtype=np.uint8)
NPC_COLOR = np.array([40, 70, 255], dtype=np.uint8)
CRASHED_COLOR = np.array([255, 40, 40], dtype=np.uint8)


def _fill_rectangle(image: np.ndarray, cx: float, cy: float, heading: float,
                    length_px: float, width_px: float, color: np.ndarray) -> None:
    half_diag = 0.5 * math.hypot(length_px, width_px)
    x_lo = max(0, int(math.floor(cx - half_diag)))
    x_hi = min(FRAME_SIZE - 1, int(math.ceil(cx + half_diag)))
    y_lo = max(0, int(math.floor(cy - half_diag)))
    y_hi = min(FRAME_SIZE - 1, int(math.ceil(cy + half_diag)))
    if x_lo > x_hi or y_lo > y_hi:
        return
    ys, xs = np.mgrid[y_lo:y_hi + 1, x_lo:x_hi + 1]
    dx = xs + 0.5 - cx
    dy = ys + 0.5 - cy
    c, s = math.cos(heading), math.sin(heading)
    local_x = dx * c + dy * s
    local_y = -dx * s + dy * c
    mask = (np.abs(local_x) <= length_px / 2.0) & (np.abs(local_y) <= width_px / 2.0)
    image[y_lo:y_hi + 1, x_lo:x_hi + 1][mask] = color


def render_frame(world: WorldState) -> np.ndarray:
    """224 x 224 x 3 uint8 ego-centered top-down view."""
    cfg = world.config
    ego = world.ego
    image = np.empty((FRAME_SIZE, FRAME_SIZE, 3), dtype=np.uint8)
    image[:] = BACKGROUND

    center = FRAME_SIZE / 2.0

    def to_px(x: float, y: float):
        return (center + (x - ego.x) * PIXELS_PER_METER,
                center + (y - ego.y) * PIXELS_PER_METER)

    # Lane boundary markings (horizontal lines).
    for boundary in range(cfg.lane_count + 1):
        y_m = (boundary - 0.5) * cfg.lane_width
        _, py = to_px(ego.x, y_m)
        row = int(round(py))
        if 0 <= row < FRAME_SIZE:
            image[row, :] = LANE_MARKING

    length_px = cfg.vehicle_length * PIXELS_PER_METER
    width_px = cfg.vehicle_width * PIXELS_PER_METER
    # Npcs first so the ego glyph is drawn on top.
    for vehicle in world.vehicles[1:]:
        px, py = to_px(vehicle.x, vehicle.y)
        color = CRASHED_COLOR if vehicle.crashed else NPC_COLOR
        _fill_rectangle(image, px, py, vehicle.heading, length_px, width_px, color)
    px, py = to_px(ego.x, ego.y)
    _fill_rectangle(image, px, py, ego.heading, length_px, width_px, EGO_COLOR)
    return image


class FrameBuffer:
    """Sliding window over the most recent CLIP_LENGTH frames."""

    def __init__(self, maxlen: int = CLIP_LENGTH):
        self._frames: deque = deque(maxlen=maxlen)

    def push(self, frame: np.ndarray) -> None:
        self._frames.append(frame)

    def extend(self, frames: Iterable[np.ndarray]) -> None:
        for frame in frames:
            self.push(frame)

    def __len__(self) -> int:
        return len(self._frames)

    def frames(self) -> List[np.ndarray]:
        return list(self._frames)

    def clear(self) -> None:
        self._frames.clear()


def stack_video(history: Sequence[np.ndarray], current: np.ndarray = None) -> np.ndarray:
    """(30, 224, 224, 3) clip of the most recent frames, oldest first.

    Short histories (episode start) are front-padded by repeating the
    earliest available frame.
    """
    if isinstance(history, FrameBuffer):
        frames = history.frames()
    else:
        frames = list(history)
    if current is not None:
        frames.append(current)
    if not frames:
        raise ValueError("stack_video needs at least one frame")
    frames = frames[-CLIP_LENGTH:]
    if len(frames) < CLIP_LENGTH:
        frames = [frames[0]] * (CLIP_LENGTH - len(frames)) + frames
    return np.stack(frames, axis=0)


def save_frame_png(frame: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(frame, mode="RGB").save(path, format="PNG")


def load_frame_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))
