"""Deterministic closed-loop highway simulator.

The ego vehicle is driven by discrete meta-actions realized through
proportional low-level controllers; npc vehicles follow IDM + MOBIL.
All randomness flows through the per-world seeded generator, so a
(config, seed, action sequence) triple fully determines the episode.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .collision import check_collision
from .config import EnvConfig, validate_env_config
from .driver_models import NpcParams, npc_control
from .errors import LifecycleError, SpawnError

# Low-level controller gains (ego and npc lateral tracking).
KP_SPEED = 1.0          # 1/s, acceleration toward target speed
KP_LATERAL = 0.4        # 1/s, lateral speed command per meter of offset
MAX_STEER = 0.3         # rad, heading command bound
LANE_CHANGE_COOLDOWN = 1.0   # s between npc lane-change decisions
SPAWN_RETRIES = 100
SPAWN_GAP_SCALE = 3.0   # mean gap = scale * ego_spacing * vehicle_length / density


class MetaAction(enum.IntEnum):
    LANE_LEFT = 0
    IDLE = 1
    LANE_RIGHT = 2
    FASTER = 3
    SLOWER = 4


@dataclass
class VehicleState:
    id: int
    lane_index: int
    x: float
    y: float
    speed: float
    heading: float = 0.0
    target_speed: float = 25.0
    target_lane: int = 0
    crashed: bool = False
    is_ego: bool = False
    lane_change_timer: float = 0.0

    def copy(self) -> "VehicleState":
        return replace(self)


@dataclass
class WorldState:
    vehicles: List[VehicleState]       # ego first
    step_index: int
    rng: np.random.Generator
    config: EnvConfig
    terminated: bool = False
    truncated: bool = False

    @property
    def ego(self) -> VehicleState:
        return self.vehicles[0]

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated

    def copy(self) -> "WorldState":
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return WorldState(
            vehicles=[v.copy() for v in self.vehicles],
            step_index=self.step_index,
            rng=rng,
            config=self.config,
            terminated=self.terminated,
            truncated=self.truncated,
        )


@dataclass(frozen=True)
class StepOutcome:
    world: WorldState
    collided: bool
    ego_speed: float
    ego_x: float
    terminated: bool
    truncated: bool
    frames: Optional[list] = None      # per-substep renders when requested


def _overlaps_any(candidate: VehicleState, placed: List[VehicleState], cfg: EnvConfig) -> bool:
    margin = 1.0  # extra clearance at spawn time
    return any(
        check_collision(candidate, other, cfg.vehicle_length + margin, cfg.vehicle_width)
        for other in placed
    )


def reset(config: EnvConfig, seed: int) -> WorldState:
    """Build the initial world for one episode; bit-identical for identical inputs."""
    validate_env_config(config)
    rng = np.random.default_rng(seed)

    ego_lane = int(rng.integers(config.lane_count))
    ego_speed = float(config.target_speeds[int(rng.integers(len(config.target_speeds)))])
    ego = VehicleState(
        id=0, lane_index=ego_lane, x=0.0, y=config.lane_center(ego_lane),
        speed=ego_speed, target_speed=ego_speed, target_lane=ego_lane, is_ego=True,
    )

    mean_gap = SPAWN_GAP_SCALE * config.ego_spacing * config.vehicle_length / config.vehicles_density
    v_lo, v_hi = config.target_speeds[0], config.target_speeds[-1]
    vehicles = [ego]
    frontier_ahead = {lane: ego.x for lane in range(config.lane_count)}
    frontier_behind = {lane: ego.x for lane in range(config.lane_count)}
    for vid in range(1, config.spawn_count + 1):
        placed = None
        for _ in range(SPAWN_RETRIES):
            lane = int(rng.integers(config.lane_count))
            ahead = bool(rng.random() < 0.75)
            gap = mean_gap * float(0.7 + 0.6 * rng.random())
            if ahead:
                x = frontier_ahead[lane] + gap + config.vehicle_length
            else:
                x = frontier_behind[lane] - gap - config.vehicle_length
            desired = float(rng.uniform(v_lo, v_hi))
            candidate = VehicleState(
                id=vid, lane_index=lane, x=x, y=config.lane_center(lane),
                speed=desired * float(rng.uniform(0.8, 1.0)),
                target_speed=desired, target_lane=lane,
            )
            if not _overlaps_any(candidate, vehicles, config):
                if ahead:
                    frontier_ahead[lane] = x
                else:
                    frontier_behind[lane] = x
                placed = candidate
                break
        if placed is None:
            raise SpawnError(f"could not place vehicle {vid} after {SPAWN_RETRIES} retries")
        vehicles.append(placed)

    return WorldState(vehicles=vehicles, step_index=0, rng=rng, config=config)


def _apply_meta_action(world: WorldState, action: MetaAction) -> None:
    cfg = world.config
    ego = world.ego
    if action == MetaAction.LANE_LEFT:
        ego.target_lane = max(0, ego.target_lane - 1)
    elif action == MetaAction.LANE_RIGHT:
        ego.target_lane = min(cfg.lane_count - 1, ego.target_lane + 1)
    elif action in (MetaAction.FASTER, MetaAction.SLOWER):
        speeds = cfg.target_speeds
        idx = min(range(len(speeds)), key=lambda i: abs(speeds[i] - ego.target_speed))
        idx += 1 if action == MetaAction.FASTER else -1
        ego.target_speed = speeds[max(0, min(len(speeds) - 1, idx))]


def _steer_toward_lane(vehicle: VehicleState, cfg: EnvConfig) -> None:
    target_y = cfg.lane_center(vehicle.target_lane)
    lateral_cmd = KP_LATERAL * (target_y - vehicle.y)
    denom = max(vehicle.speed, 1.0)
    vehicle.heading = max(-MAX_STEER, min(MAX_STEER, lateral_cmd / denom))


def _integrate(vehicle: VehicleState, accel: float, dt: float, cfg: EnvConfig) -> None:
    vehicle.speed = max(0.0, vehicle.speed + accel * dt)
    vehicle.x += vehicle.speed * math.cos(vehicle.heading) * dt
    vehicle.y += vehicle.speed * math.sin(vehicle.heading) * dt
    vehicle.lane_index = max(0, min(cfg.lane_count - 1,
                                    int(round(vehicle.y / cfg.lane_width))))


def step(world: WorldState, action: MetaAction,
         npc_params: NpcParams = NpcParams(),
         render_substeps=None) -> StepOutcome:
    """Advance one policy step (sim_frequency / policy_frequency substeps).

    ``render_substeps``, if given, is called with the world after every substep
    and its results are collected into ``StepOutcome.frames``.
    """
    if world.done:
        raise LifecycleError("step() called on a finished episode")
    action = MetaAction(action)
    cfg = world.config
    _apply_meta_action(world, action)

    dt = cfg.dt
    collided = False
    frames = [] if render_substeps is not None else None
    for _ in range(cfg.substeps):
        ego = world.ego
        ego_accel = KP_SPEED * (ego.target_speed - ego.speed)
        _steer_toward_lane(ego, cfg)
        npc_commands = []
        for vehicle in world.vehicles[1:]:
            vehicle.lane_change_timer = max(0.0, vehicle.lane_change_timer - dt)
            centered = abs(vehicle.y - cfg.lane_center(vehicle.target_lane)) \
                < npc_params.lane_keep_tolerance
            may_change = vehicle.lane_change_timer <= 0.0 and centered
            accel, lane_change = npc_control(
                vehicle, world.vehicles, npc_params, cfg.lane_count,
                cfg.vehicle_length, allow_lane_change=may_change)
            npc_commands.append((vehicle, accel, lane_change))
        for vehicle, accel, lane_change in npc_commands:
            if lane_change is not None:
                vehicle.target_lane = vehicle.target_lane + lane_change
                vehicle.lane_change_timer = LANE_CHANGE_COOLDOWN
            _steer_toward_lane(vehicle, cfg)
            _integrate(vehicle, accel, dt, cfg)
        _integrate(ego, ego_accel, dt, cfg)

        for vehicle in world.vehicles[1:]:
            if check_collision(ego, vehicle, cfg.vehicle_length, cfg.vehicle_width):
                ego.crashed = True
                vehicle.crashed = True
                collided = True
        if frames is not None:
            frames.append(render_substeps(world))
        if collided:
            break

    world.step_index += 1
    world.terminated = collided
    world.truncated = (not collided) and world.step_index >= cfg.duration
    return StepOutcome(
        world=world,
        collided=collided,
        ego_speed=world.ego.speed,
        ego_x=world.ego.x,
        terminated=world.terminated,
        truncated=world.truncated,
        frames=frames,
    )
