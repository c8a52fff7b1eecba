"""PPO training: rollout collection, generalized advantage estimation,
clipped-surrogate updates, checkpoints and metrics logging."""

from __future__ import annotations

import csv
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import torch

from .config import EnvConfig
from .errors import NumericalError, PersistenceError
from .networks import ACTION_COUNT, PolicyValueNet, flatten_obs, policy_forward, sample_action
from .observations import build_kinematics
from .rendering import render_frame
from .rewards import RewardComputer, RewardSpec
from .simulation import MetaAction, reset, step

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class PpoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    learning_rate: float = 3e-4
    rollout_length: int = 2048
    epochs_per_update: int = 10
    minibatch_size: int = 64
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    total_env_steps: int = 100_000
    checkpoint_every_updates: int = 10
    hidden_sizes: Tuple[int, ...] = (256, 256)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        if self.clip_epsilon <= 0.0:
            raise ValueError(f"clip_epsilon must be positive, got {self.clip_epsilon}")

    @staticmethod
    def from_mapping(mapping: dict) -> "PpoConfig":
        fields = {f.name for f in PpoConfig.__dataclass_fields__.values()}
        extra = set(mapping) - fields
        if extra:
            raise ValueError(f"unknown ppo config keys: {sorted(extra)}")
        kwargs = {}
        for key, raw in mapping.items():
            if key == "hidden_sizes":
                kwargs[key] = tuple(int(v) for v in str(raw).strip("[]()").replace(",", " ").split())
            elif key in ("rollout_length", "epochs_per_update", "minibatch_size",
                         "total_env_steps", "checkpoint_every_updates", "seed"):
                kwargs[key] = int(raw)
            else:
                kwargs[key] = float(raw)
        return PpoConfig(**kwargs)


@dataclass
class RolloutBuffer:
    states: List[np.ndarray] = field(default_factory=list)
    actions: List[int] = field(default_factory=list)
    log_probs: List[float] = field(default_factory=list)
    rewards: List[float] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    dones: List[bool] = field(default_factory=list)
    bootstrap_value: float = 0.0

    def add(self, state, action, log_prob, reward, value, done) -> None:
        self.states.append(flatten_obs(state))
        self.actions.append(int(action))
        self.log_probs.append(float(log_prob))
        self.rewards.append(float(reward))
        self.values.append(float(value))
        self.dones.append(bool(done))

    def __len__(self) -> int:
        return len(self.rewards)


def compute_gae(buffer: RolloutBuffer, gamma: float, lam: float):
    """Exponentially-weighted TD-residual advantages and value targets."""
    n = len(buffer)
    rewards = np.asarray(buffer.rewards, dtype=np.float64)
    values = np.asarray(buffer.values, dtype=np.float64)
    dones = np.asarray(buffer.dones, dtype=np.float64)
    next_values = np.append(values[1:], buffer.bootstrap_value)
    # A value carried across an episode boundary would leak; mask with done.
    next_values = next_values * (1.0 - dones)
    advantages = np.zeros(n)
    running = 0.0
    for t in range(n - 1, -1, -1):
        delta = rewards[t] + gamma * next_values[t] - values[t]
        running = delta + gamma * lam * (1.0 - dones[t]) * running
        advantages[t] = running
    return advantages, advantages + values


def ppo_update(net: PolicyValueNet, optimizer: torch.optim.Optimizer,
               buffer: RolloutBuffer, config: PpoConfig,
               rng: np.random.Generator) -> dict:
    """One clipped-surrogate optimization pass over a full rollout."""
    advantages, returns = compute_gae(buffer, config.gamma, config.gae_lambda)
    adv_std = advantages.std()
    advantages = (advantages - advantages.mean()) / (adv_std + 1e-8)

    states = torch.from_numpy(np.stack(buffer.states))
    actions = torch.as_tensor(buffer.actions, dtype=torch.long)
    old_log_probs = torch.as_tensor(buffer.log_probs, dtype=torch.float32)
    adv_t = torch.as_tensor(advantages, dtype=torch.float32)
    ret_t = torch.as_tensor(returns, dtype=torch.float32)

    n = len(buffer)
    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "clip_fraction": 0.0}
    batches = 0
    for _ in range(config.epochs_per_update):
        order = rng.permutation(n)
        for start in range(0, n, config.minibatch_size):
            idx = torch.as_tensor(order[start:start + config.minibatch_size])
            logits, values = net(states[idx])
            log_probs_all = torch.log_softmax(logits, dim=-1)
            new_log_probs = log_probs_all.gather(1, actions[idx].unsqueeze(1)).squeeze(1)
            ratio = torch.exp(new_log_probs - old_log_probs[idx])
            adv = adv_t[idx]
            surrogate = torch.minimum(
                ratio * adv,
                torch.clamp(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon) * adv,
            )
            entropy = -(log_probs_all.exp() * log_probs_all).sum(dim=-1).mean()
            policy_loss = -surrogate.mean()
            value_loss = torch.mean((values - ret_t[idx]) ** 2)
            loss = policy_loss + config.value_coef * value_loss - config.entropy_coef * entropy
            if not torch.isfinite(loss):
                raise NumericalError("non-finite PPO loss; update aborted")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            with torch.no_grad():
                clipped = (torch.abs(ratio - 1.0) > config.clip_epsilon).float().mean()
            stats["policy_loss"] += float(policy_loss.detach())
            stats["value_loss"] += float(value_loss.detach())
            stats["entropy"] += float(entropy.detach())
            stats["clip_fraction"] += float(clipped)
            batches += 1
    return {k: v / max(batches, 1) for k, v in stats.items()}


# ---------------------------------------------------------------------------
# Checkpoints: versioned named blocks, no pickling.

def checkpoint_save(net: PolicyValueNet, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": CHECKPOINT_VERSION,
        "obs_dim": net.obs_dim,
        "action_count": net.action_count,
        "hidden_sizes": list(net.hidden_sizes),
    }
    blocks = {name: tensor.detach().numpy() for name, tensor in net.state_dict().items()}
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
             **blocks)


def checkpoint_load(path, net: Optional[PolicyValueNet] = None) -> PolicyValueNet:
    path = Path(path)
    try:
        with np.load(path) as data:
            arrays = {name: data[name] for name in data.files}
    except (OSError, ValueError, zipfile.BadZipFile, EOFError) as exc:
        raise PersistenceError(f"cannot read checkpoint {path}: {exc}") from exc
    if "__meta__" not in arrays:
        raise PersistenceError(f"checkpoint {path} has no metadata block")
    meta = json.loads(arrays.pop("__meta__").tobytes().decode("utf-8"))
    if meta.get("version") != CHECKPOINT_VERSION:
        raise PersistenceError(
            f"checkpoint version {meta.get('version')} unsupported "
            f"(expected {CHECKPOINT_VERSION})")
    if net is None:
        net = PolicyValueNet(meta["obs_dim"], meta["action_count"],
                             tuple(meta["hidden_sizes"]))
    state = net.state_dict()
    if set(state) != set(arrays):
        raise PersistenceError(
            f"checkpoint blocks {sorted(arrays)} do not match network blocks {sorted(state)}")
    for name, array in arrays.items():
        if tuple(state[name].shape) != array.shape:
            raise PersistenceError(
                f"shape mismatch for block {name!r}: checkpoint {array.shape}, "
                f"network {tuple(state[name].shape)}")
    net.load_state_dict({name: torch.from_numpy(array) for name, array in arrays.items()})
    return net


# ---------------------------------------------------------------------------
# Training loop.

def train(env_config: EnvConfig, reward_spec: RewardSpec, ppo_config: PpoConfig,
          run_dir, backend=None, log_progress=None) -> Path:
    """Alternate rollout collection and PPO updates until total_env_steps.

    Returns the path of the final checkpoint.  Fully reproducible for a
    fixed (env_config, reward_spec, ppo_config) with reference backends.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    checkpoints = run_dir / "checkpoints"
    checkpoints.mkdir(exist_ok=True)
    metrics_path = run_dir / "metrics.csv"

    torch.manual_seed(ppo_config.seed)
    torch.set_num_threads(1)
    rng = np.random.default_rng(ppo_config.seed)
    obs_dim = env_config.observed_vehicles * 8
    net = PolicyValueNet(obs_dim, ACTION_COUNT, ppo_config.hidden_sizes)
    optimizer = torch.optim.Adam(net.parameters(), lr=ppo_config.learning_rate)
    computer = RewardComputer(reward_spec, backend=backend)

    world = None
    state = None
    episode_len = 0
    finished_lengths: List[int] = []

    def new_episode():
        nonlocal world, state, episode_len
        world = reset(env_config, int(rng.integers(2 ** 62)))
        state = build_kinematics(world)
        computer.reset()
        episode_len = 0

    new_episode()
    total_steps = 0
    update_index = 0
    with open(metrics_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", "mean_reward", "mean_episode_len",
                         "policy_loss", "value_loss", "entropy", "clip_fraction"])
        while total_steps < ppo_config.total_env_steps:
            buffer = RolloutBuffer()
            finished_lengths.clear()
            while len(buffer) < ppo_config.rollout_length:
                probs, value = policy_forward(net, state)
                action, log_prob = sample_action(probs, rng)
                outcome = step(world, MetaAction(action),
                               render_substeps=render_frame
                               if computer.needs_frames else None)
                reward = computer.step_reward(outcome)
                done = outcome.terminated or outcome.truncated
                buffer.add(state, action, log_prob, reward, value, done)
                episode_len += 1
                total_steps += 1
                if done:
                    finished_lengths.append(episode_len)
                    new_episode()
                else:
                    state = build_kinematics(world)
            if buffer.dones[-1]:
                buffer.bootstrap_value = 0.0
            else:
                _, buffer.bootstrap_value = policy_forward(net, state)
            stats = ppo_update(net, optimizer, buffer, ppo_config, rng)
            update_index += 1
            mean_ep = float(np.mean(finished_lengths)) if finished_lengths else float(episode_len)
            row = [total_steps, float(np.mean(buffer.rewards)), mean_ep,
                   stats["policy_loss"], stats["value_loss"], stats["entropy"],
                   stats["clip_fraction"]]
            writer.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in row])
            handle.flush()
            if log_progress is not None:
                log_progress(total_steps, row)
            if update_index % ppo_config.checkpoint_every_updates == 0:
                checkpoint_save(net, checkpoints / f"update_{update_index:05d}.npz")
    final = checkpoints / "final.npz"
    checkpoint_save(net, final)
    return final
