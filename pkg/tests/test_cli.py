import json

import numpy as np
import pytest
from click.testing import CliRunner

from oppodrive.cli import main
from oppodrive.embeddings import OPPOSITE_TEXT_GOAL
from oppodrive.rendering import render_frame, save_frame_png
from oppodrive.simulation import reset
from oppodrive.config import EnvConfig

TINY_RUN_CONFIG = """\
[env]
lane_count = 3
vehicles_density = 1
duration = 8
spawn_count = 6

[reward]
kind = speed_survival

[ppo]
rollout_length = 32
total_env_steps = 32
epochs_per_update = 2
minibatch_size = 16
hidden_sizes = 32, 32
checkpoint_every_updates = 1
seed = 3
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_run(tmp_path, runner):
    config = tmp_path / "run.ini"
    config.write_text(TINY_RUN_CONFIG)
    run_dir = tmp_path / "run"
    result = runner.invoke(main, ["train", "--config", str(config),
                                  "--run-dir", str(run_dir),
                                  "--trace-episodes", "4"])
    assert result.exit_code == 0, result.output
    return run_dir


class TestTrain:
    def test_run_artifacts(self, tiny_run):
        assert (tiny_run / "manifest.json").exists()
        assert (tiny_run / "metrics.csv").exists()
        assert (tiny_run / "checkpoints" / "final.npz").exists()
        assert (tiny_run / "episodes" / "episodes.csv").exists()

    def test_manifest_records_configuration(self, tiny_run):
        manifest = json.loads((tiny_run / "manifest.json").read_text())
        assert manifest["env"]["lane_count"] == 3
        assert manifest["ppo"]["rollout_length"] == 32
        assert manifest["reward"]["kind"] == "speed_survival"
        assert len(manifest["eval_seeds"]) == 17

    def test_refuses_nonempty_run_dir(self, tmp_path, runner):
        config = tmp_path / "run.ini"
        config.write_text(TINY_RUN_CONFIG)
        run_dir = tmp_path / "busy"
        run_dir.mkdir()
        (run_dir / "leftover.txt").write_text("x")
        result = runner.invoke(main, ["train", "--config", str(config),
                                      "--run-dir", str(run_dir)])
        assert result.exit_code != 0
        assert "not empty" in result.output

    def test_bad_config_fails_before_creating_run_dir(self, tmp_path, runner):
        config = tmp_path / "bad.ini"
        config.write_text("[env]\nlane_count = 0\n")
        run_dir = tmp_path / "never"
        result = runner.invoke(main, ["train", "--config", str(config),
                                      "--run-dir", str(run_dir)])
        assert result.exit_code != 0
        assert not run_dir.exists()

    def test_unknown_reward_kind_reported(self, tmp_path, runner):
        config = tmp_path / "bad.ini"
        config.write_text("[reward]\nkind = jackpot\n")
        result = runner.invoke(main, ["train", "--config", str(config),
                                      "--run-dir", str(tmp_path / "never")])
        assert result.exit_code != 0
        assert "jackpot" in result.output


class TestEvaluate:
    def test_writes_report_files(self, tiny_run, tmp_path, runner):
        out = tmp_path / "eval"
        result = runner.invoke(main, [
            "evaluate", "--checkpoint", str(tiny_run / "checkpoints" / "final.npz"),
            "--setting", "lane-3-density-1", "--seeds", "1,2,3",
            "--out-dir", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "eval_lane-3-density-1.csv").exists()
        table = (out / "eval_lane-3-density-1.txt").read_text()
        assert "SR" in table and "lane-3-density-1" in table

    def test_bad_setting_name(self, tiny_run, runner):
        result = runner.invoke(main, [
            "evaluate", "--checkpoint", str(tiny_run / "checkpoints" / "final.npz"),
            "--setting", "motorway-9", "--seeds", "1"])
        assert result.exit_code != 0

    def test_missing_checkpoint(self, runner, tmp_path):
        result = runner.invoke(main, ["evaluate", "--checkpoint",
                                      str(tmp_path / "nope.npz"),
                                      "--setting", "lane-3-density-1"])
        assert result.exit_code != 0


class TestAnalyze:
    def test_exports_landscape(self, tiny_run, runner):
        result = runner.invoke(main, ["analyze", "--run", str(tiny_run)])
        assert result.exit_code == 0, result.output
        assert (tiny_run / "reward_landscape.csv").exists()
        summary = json.loads((tiny_run / "landscape_summary.json").read_text())
        assert summary["rows"] >= 0

    def test_requires_traced_episodes(self, tmp_path, runner):
        empty_run = tmp_path / "untraced"
        empty_run.mkdir()
        result = runner.invoke(main, ["analyze", "--run", str(empty_run)])
        assert result.exit_code != 0
        assert "trace-episodes" in result.output

    def test_unknown_reward_stream(self, tiny_run, runner):
        result = runner.invoke(main, ["analyze", "--run", str(tiny_run),
                                      "--reward", "absent"])
        assert result.exit_code != 0


class TestRender:
    def test_writes_frames(self, tiny_run, runner):
        result = runner.invoke(main, ["render", "--run", str(tiny_run),
                                      "--episode", "0",
                                      "--setting", "lane-3-density-1"])
        assert result.exit_code == 0, result.output
        frames = list((tiny_run / "renders" / "episode_00").glob("*.png"))
        assert len(frames) >= 2

    def test_episode_index_bounds(self, tiny_run, runner):
        result = runner.invoke(main, ["render", "--run", str(tiny_run),
                                      "--episode", "99"])
        assert result.exit_code != 0


class TestEmbedProbe:
    def test_text_goal_payload_scores_zero_reward(self, tmp_path, runner):
        payload = tmp_path / "goal.txt"
        payload.write_text(OPPOSITE_TEXT_GOAL + "\n")
        result = runner.invoke(main, ["embed-probe", "--modality", "text",
                                      "--payload", str(payload)])
        assert result.exit_code == 0, result.output
        assert "similarity: 1.000000" in result.output
        assert "reward:     0.000000" in result.output

    def test_image_payload(self, tmp_path, runner):
        frame = render_frame(reset(EnvConfig(spawn_count=0), 1))
        path = tmp_path / "frame.png"
        save_frame_png(frame, path)
        result = runner.invoke(main, ["embed-probe", "--modality", "image",
                                      "--payload", str(path)])
        assert result.exit_code == 0, result.output
        assert "similarity:" in result.output

    def test_video_payload_from_frame_dir(self, tmp_path, runner):
        world = reset(EnvConfig(spawn_count=0), 1)
        frame = render_frame(world)
        clip_dir = tmp_path / "clip"
        clip_dir.mkdir()
        for i in range(3):
            save_frame_png(frame, clip_dir / f"frame_{i}.png")
        result = runner.invoke(main, ["embed-probe", "--modality", "video",
                                      "--payload", str(clip_dir)])
        assert result.exit_code == 0, result.output

    def test_empty_video_dir_rejected(self, tmp_path, runner):
        clip_dir = tmp_path / "empty"
        clip_dir.mkdir()
        result = runner.invoke(main, ["embed-probe", "--modality", "video",
                                      "--payload", str(clip_dir)])
        assert result.exit_code != 0
