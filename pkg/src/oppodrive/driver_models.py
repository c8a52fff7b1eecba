"""Longitudinal car following (IDM) and incentive-based lane changes (MOBIL)
for the npc traffic."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence


@dataclass(frozen=True)
class NpcParams:
    time_headway: float = 1.5        # s
    min_gap: float = 10.0            # s0, m
    accel_max: float = 3.0           # m/s^2
    decel_comfort: float = 5.0       # b, m/s^2 (also the clipping bound)
    delta: float = 4.0               # free-flow exponent
    politeness: float = 0.3
    lane_change_min_gain: float = 0.2    # m/s^2
    safe_braking: float = 4.0            # max braking imposed on others, m/s^2
    lane_keep_tolerance: float = 0.5     # m off lane center allowed before changing again


def idm_acceleration(speed: float, desired_speed: float, gap: Optional[float],
                     speed_delta: float, params: NpcParams) -> float:
    """IDM acceleration; ``gap`` is bumper-to-bumper to the leader (None if free road),
    ``speed_delta`` is own speed minus leader speed."""
    v0 = max(desired_speed, 1e-3)
    accel = params.accel_max * (1.0 - (max(speed, 0.0) / v0) ** params.delta)
    if gap is not None:
        if gap <= 0.0:
            return -params.decel_comfort
        desired_gap = (params.min_gap + speed * params.time_headway
                       + speed * speed_delta / (2.0 * math.sqrt(params.accel_max * params.decel_comfort)))
        accel -= params.accel_max * (max(desired_gap, 0.0) / gap) ** 2
    return max(-params.decel_comfort, min(params.accel_max, accel))


def _leader_follower(vehicle, others: Sequence, lane: int, length: float):
    """Nearest front and rear vehicles on ``lane`` with bumper-to-bumper gaps."""
    front, front_gap = None, math.inf
    rear, rear_gap = None, math.inf
    for other in others:
        if other.lane_index != lane:
            continue
        dx = other.x - vehicle.x
        gap = abs(dx) - length
        if dx >= 0.0 and gap < front_gap:
            front, front_gap = other, gap
        elif dx < 0.0 and gap < rear_gap:
            rear, rear_gap = other, gap
    return front, front_gap, rear, rear_gap


def _accel_toward(vehicle_speed: float, desired: float, leader, leader_gap: float,
                  params: NpcParams) -> float:
    if leader is None:
        return idm_acceleration(vehicle_speed, desired, None, 0.0, params)
    return idm_acceleration(vehicle_speed, desired, leader_gap,
                            vehicle_speed - leader.speed, params)


def npc_control(vehicle, neighbors: Sequence, params: NpcParams, lane_count: int,
                vehicle_length: float = 5.0, allow_lane_change: bool = True):
    """Acceleration command and optional lane-change direction (-1 left / +1 right)
    for one npc vehicle."""
    others = [v for v in neighbors if v.id != vehicle.id]
    lane = vehicle.lane_index
    front, front_gap, _, _ = _leader_follower(vehicle, others, lane, vehicle_length)
    accel = _accel_toward(vehicle.speed, vehicle.target_speed, front, front_gap, params)

    lane_change = None
    if allow_lane_change:
        best_gain = params.lane_change_min_gain
        a_self_old = accel
        for direction in (-1, 1):
            target = lane + direction
            if not 0 <= target < lane_count:
                continue
            new_front, new_front_gap, new_rear, new_rear_gap = _leader_follower(
                vehicle, others, target, vehicle_length)
            # Safety: neither we nor the new follower may be forced to brake hard.
            a_self_new = _accel_toward(vehicle.speed, vehicle.target_speed,
                                       new_front, new_front_gap, params)
            if a_self_new < -params.safe_braking:
                continue
            if new_rear is not None:
                a_follower_new = idm_acceleration(
                    new_rear.speed, new_rear.target_speed, new_rear_gap,
                    new_rear.speed - vehicle.speed, params)
                if a_follower_new < -params.safe_braking:
                    continue
                a_follower_old = _accel_toward(
                    new_rear.speed, new_rear.target_speed, new_front,
                    new_rear_gap + vehicle_length + new_front_gap
                    if new_front is not None else math.inf, params)
                follower_term = a_follower_new - a_follower_old
            else:
                follower_term = 0.0
            gain = (a_self_new - a_self_old) + params.politeness * follower_term
            if gain > best_gain:
                best_gain = gain
                lane_change = direction
    return accel, lane_change
