import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oppodrive.config import EnvConfig
from oppodrive.observations import (NO_COLLISION_SENTENCE, build_kinematics,
                                    compute_ttc, describe_text, parse_text)
from oppodrive.simulation import VehicleState, WorldState


def make_world(vehicles, config=None):
    cfg = config or EnvConfig(spawn_count=0)
    return WorldState(vehicles=vehicles, step_index=0,
                      rng=np.random.default_rng(0), config=cfg)


def ego(speed=30.0, lane=1, x=0.0, cfg=None):
    cfg = cfg or EnvConfig(spawn_count=0)
    return VehicleState(id=0, lane_index=lane, x=x, y=cfg.lane_center(lane),
                        speed=speed, target_speed=speed, target_lane=lane, is_ego=True)


def npc(vid, lane, x, speed, cfg=None):
    cfg = cfg or EnvConfig(spawn_count=0)
    return VehicleState(id=vid, lane_index=lane, x=x, y=cfg.lane_center(lane),
                        speed=speed, target_speed=speed, target_lane=lane)


class TestKinematics:
    def test_ego_only_padding(self):
        obs = build_kinematics(make_world([ego()]))
        assert obs.shape == (33, 8)
        assert obs[0, 0] == 1.0
        assert np.all(obs[1:] == 0.0)

    def test_relative_position_scaling(self):
        world = make_world([ego(lane=1), npc(1, 1, 50.0, 25.0)])
        obs = build_kinematics(world)
        assert obs[1, 1] == pytest.approx(0.5)
        assert obs[1, 2] == pytest.approx(0.0)

    def test_nearest_vehicles_kept(self):
        vehicles = [ego(lane=1)] + [npc(i, 1, 10.0 * i, 25.0) for i in range(1, 41)]
        obs = build_kinematics(make_world(vehicles))
        assert obs[:, 0].sum() == 33
        # Farthest x among kept rows is the 32nd nearest (x = 320 -> 1.0 clipped).
        assert obs[32, 1] <= 1.0

    def test_values_bounded(self):
        vehicles = [ego(lane=0)] + [npc(i, i % 4, 30.0 * i - 200.0, 20.0 + i)
                                    for i in range(1, 20)]
        obs = build_kinematics(make_world(vehicles))
        assert np.all(obs >= -1.0) and np.all(obs <= 1.0)

    def test_unit_heading_vector_on_present_rows(self):
        world = make_world([ego(lane=1), npc(1, 2, 20.0, 25.0)])
        obs = build_kinematics(world)
        present = obs[:, 0] == 1.0
        norms = obs[present, 5] ** 2 + obs[present, 6] ** 2
        assert np.allclose(norms, 1.0)


class TestTtc:
    def test_front_vehicle_arithmetic(self):
        world = make_world([ego(speed=30.0), npc(1, 1, 45.0, 20.0)])
        report = compute_ttc(world)
        (entry,) = report.entries
        assert entry.lane_relation == "same"
        assert entry.gap == pytest.approx(40.0)
        assert entry.ttc == pytest.approx(4.0)
        assert entry.speed_diff == pytest.approx(-10.0)

    def test_non_closing_is_infinite(self):
        world = make_world([ego(speed=30.0), npc(1, 1, 45.0, 30.0)])
        (entry,) = compute_ttc(world).entries
        assert math.isinf(entry.ttc)

    def test_attention_radius(self):
        world = make_world([ego(speed=30.0), npc(1, 1, 160.0, 10.0)])
        assert compute_ttc(world).entries == ()
        world2 = make_world([ego(speed=30.0), npc(1, 1, 140.0, 10.0)])
        assert len(compute_ttc(world2).entries) == 1

    def test_rear_same_lane_ignored(self):
        world = make_world([ego(speed=20.0), npc(1, 1, -30.0, 40.0)])
        assert compute_ttc(world).entries == ()

    def test_adjacent_rear_threat(self):
        world = make_world([ego(speed=20.0, lane=1), npc(1, 0, -25.0, 30.0)])
        (entry,) = compute_ttc(world).entries
        assert entry.lane_relation == "left"
        assert entry.longitudinal == "rear"
        assert entry.ttc == pytest.approx(2.0)

    def test_two_lanes_away_excluded(self):
        world = make_world([ego(speed=30.0, lane=0), npc(1, 2, 20.0, 10.0)])
        assert compute_ttc(world).entries == ()

    @given(gap_a=st.floats(6.0, 100.0), shrink=st.floats(0.1, 5.0))
    @settings(max_examples=100, deadline=None)
    def test_shrinking_gap_never_increases_ttc(self, gap_a, shrink):
        gap_b = max(gap_a - shrink, 5.2)
        world_a = make_world([ego(speed=30.0), npc(1, 1, gap_a, 20.0)])
        world_b = make_world([ego(speed=30.0), npc(1, 1, gap_b, 20.0)])
        ttc_a = compute_ttc(world_a).entries[0].ttc
        ttc_b = compute_ttc(world_b).entries[0].ttc
        assert ttc_b <= ttc_a


class TestDescribeText:
    def test_same_lane_sentence(self):
        world = make_world([ego(speed=30.0), npc(1, 1, 45.0, 20.0)])
        assert describe_text(compute_ttc(world)) == "A collision will be happening in 4.0s."

    def test_empty_report(self):
        world = make_world([ego(speed=30.0)])
        assert describe_text(compute_ttc(world)) == NO_COLLISION_SENTENCE

    def test_left_lane_conditional(self):
        world = make_world([ego(speed=30.0, lane=1), npc(1, 0, 30.0, 20.0)])
        assert describe_text(compute_ttc(world)) == (
            "No foreseeable collision in 5s. "
            "A collision would happen in 2.5s if ego makes a left lane change.")

    def test_right_lane_conditional(self):
        world = make_world([ego(speed=30.0, lane=1), npc(1, 2, 30.0, 20.0)])
        assert describe_text(compute_ttc(world)).endswith("right lane change.")

    def test_threshold_is_strict(self):
        # gap 50 m, closing 10 m/s -> ttc exactly 5.0 -> no-collision sentence.
        world = make_world([ego(speed=30.0), npc(1, 1, 55.0, 20.0)])
        (entry,) = compute_ttc(world).entries
        assert entry.ttc == pytest.approx(5.0)
        assert describe_text(compute_ttc(world)) == NO_COLLISION_SENTENCE

    def test_fixed_sentence_order(self):
        cfg = EnvConfig(spawn_count=0)
        world = make_world([
            ego(speed=30.0, lane=1),
            npc(1, 1, 35.0, 20.0),   # same lane, ttc 3.0
            npc(2, 0, 25.0, 20.0),   # left, ttc 2.0
            npc(3, 2, 15.0, 20.0),   # right, ttc 1.0
        ], cfg)
        text = describe_text(compute_ttc(world))
        assert text == ("A collision will be happening in 3.0s. "
                        "A collision would happen in 2.0s if ego makes a left lane change. "
                        "A collision would happen in 1.0s if ego makes a right lane change.")

    def test_round_trip_parse(self):
        world = make_world([
            ego(speed=30.0, lane=1),
            npc(1, 1, 35.0, 20.0),
            npc(2, 0, 25.0, 20.0),
        ])
        text = describe_text(compute_ttc(world))
        assert parse_text(text) == [("same", 3.0), ("left", 2.0)]

    def test_parse_rejects_off_grammar(self):
        with pytest.raises(ValueError):
            parse_text("The road is clear.")

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_grammar_closure_on_random_worlds(self, seed):
        rng = np.random.default_rng(seed)
        cfg = EnvConfig(spawn_count=0)
        vehicles = [ego(speed=float(rng.uniform(20, 40)), lane=1, cfg=cfg)]
        for vid in range(1, int(rng.integers(1, 6))):
            vehicles.append(npc(vid, int(rng.integers(0, 4)),
                                float(rng.uniform(-120, 120)),
                                float(rng.uniform(15, 45)), cfg))
        report = compute_ttc(make_world(vehicles, cfg))
        parsed = parse_text(describe_text(report))
        # One same-lane item always present, first; conditional items follow.
        assert parsed[0][0] == "same"
        assert all(side in ("left", "right") for side, _ in parsed[1:])
