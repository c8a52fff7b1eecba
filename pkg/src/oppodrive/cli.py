"""Operator entry points: train / evaluate / analyze / render / embed-probe."""

from __future__ import annotations

import dataclasses
import datetime
import json
import shutil
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import RunConfig, load_run_config
from .errors import OppodriveError
from .evaluation import (DEFAULT_EVAL_SEEDS, evaluate, landscape_summary,
                         landscape_to_csv, load_episode_logs, make_policy,
                         reward_landscape, run_episode, save_episode_logs,
                         setting_config)
from .ppo import PpoConfig, checkpoint_load, train
from .remote import ENDPOINT_ENV_VAR, RemoteBackend, RemoteEmbeddingClient
from .rewards import (RewardComputer, RewardSpec, cosine_similarity,
                      opposite_goal_reward)


@click.group()
def main() -> None:
    """Closed-loop highway RL with embedding-distance rewards."""


def _resolve_backend(name: str, modality: str):
    if name == "reference":
        return None  # RewardComputer falls back to the reference backend
    if name == "remote":
        return RemoteBackend(RemoteEmbeddingClient.from_env(), modality)
    raise click.UsageError(f"unknown backend {name!r} (expected reference or remote)")


def _write_manifest(run_dir: Path, run_config: RunConfig, reward_spec: RewardSpec,
                    ppo_config: PpoConfig, backend_name: str) -> None:
    manifest = {
        "run_id": run_dir.name,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "version": __version__,
        "env": dataclasses.asdict(run_config.env),
        "reward": dataclasses.asdict(reward_spec),
        "ppo": dataclasses.asdict(ppo_config),
        "backend": backend_name,
        "seed": ppo_config.seed,
        "eval_seeds": list(DEFAULT_EVAL_SEEDS),
    }
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--run-dir", default=None, type=click.Path())
@click.option("--trace-episodes", default=0, show_default=True,
              help="log this many policy episodes after training (enables analyze)")
def cmd_train(config_path, run_dir, trace_episodes) -> None:
    """Train a policy from a run configuration file."""
    try:
        run_config = load_run_config(config_path)
        reward_spec = RewardSpec.from_mapping(run_config.reward or {"kind": "opposite_goal"})
        ppo_config = PpoConfig.from_mapping(run_config.ppo)
        backend_name = run_config.backends.get("backend", "reference")
        backend = _resolve_backend(backend_name, reward_spec.modality)
    except (OppodriveError, ValueError) as exc:
        raise click.ClickException(str(exc))

    if run_dir is None:
        stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S")
        run_dir = Path("runs") / f"{stamp}-{reward_spec.kind}-{reward_spec.modality}"
    run_dir = Path(run_dir)
    if run_dir.exists() and any(run_dir.iterdir()):
        raise click.ClickException(f"run directory {run_dir} already exists and is not empty")
    run_dir.mkdir(parents=True, exist_ok=True)
    try:
        _write_manifest(run_dir, run_config, reward_spec, ppo_config, backend_name)

        def progress(steps, row):
            click.echo(f"steps={steps} mean_reward={row[1]:.4f} mean_ep_len={row[2]:.1f}")

        final = train(run_config.env, reward_spec, ppo_config, run_dir,
                      backend=backend, log_progress=progress)
    except OppodriveError as exc:
        (run_dir / "error.json").write_text(json.dumps({"error": str(exc)}))
        raise click.ClickException(str(exc))

    if trace_episodes > 0:
        net = checkpoint_load(final)
        rng = np.random.default_rng(ppo_config.seed + 1)
        config = run_config.env
        specs = {"policy_reward": reward_spec,
                 "speed_survival": RewardSpec(kind="speed_survival")}
        logs = [run_episode(config, int(rng.integers(2 ** 62)), make_policy(net, rng),
                            reward_specs=specs, backend=backend)
                for _ in range(trace_episodes)]
        episodes_dir = run_dir / "episodes"
        episodes_dir.mkdir(exist_ok=True)
        save_episode_logs(logs, episodes_dir / "episodes.csv")
    click.echo(f"run complete: {run_dir} (final checkpoint {final})")


@main.command("evaluate")
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True))
@click.option("--setting", "settings", multiple=True, required=True,
              help="e.g. lane-4-density-2 (repeatable)")
@click.option("--seeds", default=None, help="comma-separated seed list (default: the pinned 17)")
@click.option("--out-dir", default=".", type=click.Path())
def cmd_evaluate(checkpoint_path, settings, seeds, out_dir) -> None:
    """Evaluate a checkpoint over the seeded episode protocol."""
    try:
        net = checkpoint_load(Path(checkpoint_path))
    except OppodriveError as exc:
        raise click.ClickException(str(exc))
    seed_list = (tuple(int(s) for s in seeds.split(",")) if seeds else DEFAULT_EVAL_SEEDS)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for setting in settings:
        try:
            report, _ = evaluate(net, setting, seed_list)
        except OppodriveError as exc:
            raise click.ClickException(str(exc))
        report.to_csv(out_dir / f"eval_{setting}.csv")
        (out_dir / f"eval_{setting}.txt").write_text(report.to_table() + "\n")
        click.echo(report.to_table())


@main.command("analyze")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
@click.option("--reward", "reward_name", default="policy_reward", show_default=True)
def cmd_analyze(run_dir, reward_name) -> None:
    """Export the reward landscape and collision/non-collision reward means."""
    run_dir = Path(run_dir)
    episodes_path = run_dir / "episodes" / "episodes.csv"
    if not episodes_path.exists():
        raise click.ClickException(
            f"no episode logs in {run_dir} (train with --trace-episodes to record them)")
    logs = load_episode_logs(episodes_path)
    try:
        rows = reward_landscape(logs, reward_name)
    except OppodriveError as exc:
        raise click.ClickException(str(exc))
    landscape_to_csv(rows, run_dir / "reward_landscape.csv")
    summary = landscape_summary(rows)
    (run_dir / "landscape_summary.json").write_text(json.dumps(summary, indent=2))
    click.echo(f"landscape rows: {summary['rows']}")
    click.echo(f"mean reward (collision steps):      {summary['mean_reward_collided']:.4f}")
    click.echo(f"mean reward (collision-free steps): {summary['mean_reward_collision_free']:.4f}")
    click.echo(f"difference:                         {summary['difference']:.4f}")


@main.command("render")
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
@click.option("--episode", "episode_index", required=True, type=int,
              help="index into the pinned evaluation seed list")
@click.option("--setting", default="lane-4-density-2", show_default=True)
def cmd_render(run_dir, episode_index, setting) -> None:
    """Replay one evaluation episode and dump its frames as PNGs."""
    from .rendering import render_frame, save_frame_png
    from .simulation import MetaAction, reset, step

    run_dir = Path(run_dir)
    checkpoint = run_dir / "checkpoints" / "final.npz"
    if not checkpoint.exists():
        raise click.ClickException(f"no final checkpoint under {run_dir}")
    if not 0 <= episode_index < len(DEFAULT_EVAL_SEEDS):
        raise click.ClickException(
            f"--episode must be in [0, {len(DEFAULT_EVAL_SEEDS) - 1}]")
    try:
        net = checkpoint_load(checkpoint)
        config = setting_config(setting)
    except OppodriveError as exc:
        raise click.ClickException(str(exc))
    seed = DEFAULT_EVAL_SEEDS[episode_index]
    rng = np.random.default_rng(seed)
    policy = make_policy(net, rng)
    out_dir = run_dir / "renders" / f"episode_{episode_index:02d}"
    out_dir.mkdir(parents=True, exist_ok=True)
    world = reset(config, seed)
    save_frame_png(render_frame(world), out_dir / "step_000.png")
    from .observations import build_kinematics
    while not world.done:
        action = policy(build_kinematics(world))
        step(world, MetaAction(action))
        save_frame_png(render_frame(world), out_dir / f"step_{world.step_index:03d}.png")
    click.echo(f"wrote {world.step_index + 1} frames to {out_dir}")


@main.command("embed-probe")
@click.option("--modality", required=True, type=click.Choice(["text", "image", "video"]))
@click.option("--payload", "payload_path", required=True, type=click.Path(exists=True),
              help="text file, PNG, or directory of PNGs (video)")
@click.option("--polarity", default="opposite", show_default=True,
              type=click.Choice(["opposite", "target"]))
@click.option("--backend", "backend_name", default="reference", show_default=True,
              type=click.Choice(["reference", "remote"]))
def cmd_embed_probe(modality, payload_path, polarity, backend_name) -> None:
    """Print similarity and reward of a payload against the configured goal."""
    from .embeddings import GoalSpec, reference_backend
    from .rendering import load_frame_png

    payload_path = Path(payload_path)
    if modality == "text":
        payload = payload_path.read_text(encoding="utf-8").strip()
    elif modality == "image":
        payload = load_frame_png(payload_path)
    else:
        frames = sorted(payload_path.glob("*.png"))
        if not frames:
            raise click.ClickException(f"no PNG frames under {payload_path}")
        from .rendering import stack_video
        payload = stack_video([load_frame_png(p) for p in frames])

    try:
        if backend_name == "remote":
            backend = RemoteBackend(RemoteEmbeddingClient.from_env(), modality)
        else:
            backend = reference_backend(modality)
        goal = GoalSpec.default(modality, polarity)
        goal_emb = backend.embed_goal(goal)
        obs_emb = backend.embed_observation(payload)
    except OppodriveError as exc:
        raise click.ClickException(str(exc))
    similarity = cosine_similarity(obs_emb, goal_emb)
    reward = opposite_goal_reward(obs_emb, goal_emb)
    click.echo(f"goal:       {goal.goal_text!r} ({polarity})")
    click.echo(f"similarity: {similarity:.6f}")
    click.echo(f"reward:     {reward:.6f}")


if __name__ == "__main__":
    main()
