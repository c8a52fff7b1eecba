"""Actor-critic network for the discrete meta-action policy."""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn

from .errors import InputError

ACTION_COUNT = 5


def _mlp(sizes: Sequence[int]) -> nn.Sequential:
    layers = []
    for i in range(len(sizes) - 1):
        layers.append(nn.Linear(sizes[i], sizes[i + 1]))
        if i < len(sizes) - 2:
            layers.append(nn.Tanh())
    return nn.Sequential(*layers)


class PolicyValueNet(nn.Module):
    """Separate actor and critic MLPs over the flattened kinematics array."""

    def __init__(self, obs_dim: int, action_count: int = ACTION_COUNT,
                 hidden_sizes: Sequence[int] = (256, 256)):
        super().__init__()
        self.obs_dim = int(obs_dim)
        self.action_count = int(action_count)
        self.hidden_sizes = tuple(int(h) for h in hidden_sizes)
        self.actor = _mlp((self.obs_dim, *self.hidden_sizes, self.action_count))
        self.critic = _mlp((self.obs_dim, *self.hidden_sizes, 1))

    def forward(self, obs: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        logits = self.actor(obs)
        value = self.critic(obs).squeeze(-1)
        return logits, value


def flatten_obs(state: np.ndarray) -> np.ndarray:
    return np.asarray(state, dtype=np.float32).reshape(-1)


def policy_forward(net: PolicyValueNet, state: np.ndarray) -> Tuple[np.ndarray, float]:
    """Action probabilities and state value for one kinematics observation."""
    flat = flatten_obs(state)
    if flat.shape[0] != net.obs_dim:
        raise InputError(f"state has {flat.shape[0]} features, network expects {net.obs_dim}")
    with torch.no_grad():
        logits, value = net(torch.from_numpy(flat))
        probs = torch.softmax(logits, dim=-1)
    return probs.numpy().astype(np.float64), float(value)


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> Tuple[int, float]:
    """Seeded categorical draw; returns (action, log prob of the drawn action)."""
    probs = np.asarray(probs, dtype=np.float64)
    action = int(rng.choice(len(probs), p=probs / probs.sum()))
    return action, float(np.log(probs[action]))
