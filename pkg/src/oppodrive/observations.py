"""Observation builders: the normalized kinematics array consumed by the
policy, and the time-to-collision report / text description consumed by the
reward pipeline."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np

from .simulation import WorldState

KINEMATICS_FEATURES = ("presence", "x", "y", "vx", "vy", "cos_h", "sin_h", "heading")
POSITION_SCALE = 100.0   # m
SPEED_SCALE = 40.0       # m/s
TTC_THRESHOLD = 5.0      # s
ATTENTION_FACTOR = 5.0   # radius = factor * ego_speed
MIN_GAP = 0.1            # m, floor to avoid division blow-ups

SAME_LANE_TEMPLATE = "A collision will be happening in {ttc}s."
ADJACENT_TEMPLATE = "A collision would happen in {ttc}s if ego makes a {side} lane change."
NO_COLLISION_SENTENCE = "No foreseeable collision in 5s."


def build_kinematics(world: WorldState) -> np.ndarray:
    """V x 8 float array; ego row first, then nearest vehicles, zero-padded.

    Positions are relative to the ego and scaled by 100 m, speeds by 40 m/s,
    heading by pi; everything is clipped to [-1, 1].
    """
    cfg = world.config
    ego = world.ego
    rows = np.zeros((cfg.observed_vehicles, len(KINEMATICS_FEATURES)))

    def fill(row: int, vehicle, rel_x: float, rel_y: float) -> None:
        rows[row] = (
            1.0,
            np.clip(rel_x / POSITION_SCALE, -1.0, 1.0),
            np.clip(rel_y / POSITION_SCALE, -1.0, 1.0),
            np.clip(vehicle.speed * math.cos(vehicle.heading) / SPEED_SCALE, -1.0, 1.0),
            np.clip(vehicle.speed * math.sin(vehicle.heading) / SPEED_SCALE, -1.0, 1.0),
            math.cos(vehicle.heading),
            math.sin(vehicle.heading),
            np.clip(vehicle.heading / math.pi, -1.0, 1.0),
        )

    fill(0, ego, 0.0, 0.0)
    others = sorted(world.vehicles[1:],
                    key=lambda v: math.hypot(v.x - ego.x, v.y - ego.y))
    for row, vehicle in enumerate(others[: cfg.observed_vehicles - 1], start=1):
        fill(row, vehicle, vehicle.x - ego.x, vehicle.y - ego.y)
    return rows


@dataclass(frozen=True)
class TtcEntry:
    vehicle_id: int
    lane_relation: Literal["same", "left", "right"]
    longitudinal: Literal["front", "rear"]
    ttc: float                  # seconds, math.inf when not closing
    gap: float                  # bumper-to-bumper, m
    speed_diff: float           # v_other - v_ego, m/s


@dataclass(frozen=True)
class TtcReport:
    entries: tuple

    def for_lane(self, relation: str):
        return [e for e in self.entries if e.lane_relation == relation]


def compute_ttc(world: WorldState) -> TtcReport:
    """Threat report for vehicles within 5 x ego_speed meters on the ego's
    lane or the two adjacent lanes.

    Same-lane entries cover front vehicles the ego is closing on; adjacent
    lanes additionally cover rear vehicles closing on the ego.
    """
    cfg = world.config
    ego = world.ego
    radius = ATTENTION_FACTOR * ego.speed
    entries: List[TtcEntry] = []
    for other in world.vehicles[1:]:
        dx = other.x - ego.x
        if abs(dx) > radius:
            continue
        lane_offset = other.lane_index - ego.lane_index
        if lane_offset == 0:
            relation = "same"
        elif lane_offset == -1:
            relation = "left"
        elif lane_offset == 1:
            relation = "right"
        else:
            continue
        front = dx >= 0.0
        if relation == "same" and not front:
            continue
        gap = max(abs(dx) - cfg.vehicle_length, MIN_GAP)
        speed_diff = other.speed - ego.speed
        closing = (ego.speed - other.speed) if front else (other.speed - ego.speed)
        ttc = gap / closing if closing > 0.0 else math.inf
        entries.append(TtcEntry(
            vehicle_id=other.id,
            lane_relation=relation,
            longitudinal="front" if front else "rear",
            ttc=ttc,
            gap=gap,
            speed_diff=speed_diff,
        ))
    entries.sort(key=lambda e: (e.lane_relation, e.ttc, e.gap))
    return TtcReport(entries=tuple(entries))


def format_ttc(ttc: float) -> str:
    return f"{ttc:.1f}"


def describe_text(report: TtcReport, threshold: float = TTC_THRESHOLD) -> str:
    """Template-sentence description, fixed order: same lane, then left, then right.

    The same-lane sentence reflects the soonest same-lane threat (or the
    no-collision sentence); every adjacent-lane entry under the threshold
    produces its own conditional sentence, soonest first.
    """
    sentences: List[str] = []
    same = [e for e in report.for_lane("same") if e.ttc < threshold]
    if same:
        soonest = min(same, key=lambda e: e.ttc)
        sentences.append(SAME_LANE_TEMPLATE.format(ttc=format_ttc(soonest.ttc)))
    else:
        sentences.append(NO_COLLISION_SENTENCE)
    for relation in ("left", "right"):
        for entry in sorted(report.for_lane(relation), key=lambda e: e.ttc):
            if entry.ttc < threshold:
                sentences.append(ADJACENT_TEMPLATE.format(
                    ttc=format_ttc(entry.ttc), side=relation))
    return " ".join(sentences)


_SAME_RE = re.compile(r"A collision will be happening in (\d+\.\d)s\.")
_ADJ_RE = re.compile(r"A collision would happen in (\d+\.\d)s if ego makes a (left|right) lane change\.")
_NONE_RE = re.compile(re.escape(NO_COLLISION_SENTENCE))


def parse_text(text: str) -> List[tuple]:
    """Inverse of describe_text: list of (lane_relation, ttc) with ttc None for
    the no-collision sentence.  Raises ValueError on anything off-grammar."""
    out: List[tuple] = []
    pos = 0
    while pos < len(text):
        if text[pos] == " ":
            pos += 1
            continue
        for pattern in (_SAME_RE, _ADJ_RE, _NONE_RE):
            match = pattern.match(text, pos)
            if match:
                break
        else:
            raise ValueError(f"unparseable text observation at offset {pos}: {text[pos:]!r}")
        if pattern is _SAME_RE:
            out.append(("same", float(match.group(1))))
        elif pattern is _ADJ_RE:
            out.append((match.group(2), float(match.group(1))))
        else:
            out.append(("same", None))
        pos = match.end()
    return out
