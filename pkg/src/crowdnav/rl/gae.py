"""Generalized advantage estimation over (T, B) rollout blocks."""

from __future__ import annotations

import numpy as np


def compute_advantages(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    bootstrap_values: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Raw (unnormalized) advantages and value targets.

    rewards, values, dones are (T, B); dones[t] marks that the episode ended
    at step t, cutting both the bootstrap and the recursion there.
    bootstrap_values (B,) is V of the state following the last step.
    Returns (advantages, returns), both (T, B), returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    t_len, b = rewards.shape
    if values.shape != (t_len, b) or dones.shape != (t_len, b):
        raise ValueError("rewards, values, dones must share shape (T, B)")
    if bootstrap_values.shape != (b,):
        raise ValueError("bootstrap_values must have shape (B,)")

    advantages = np.zeros((t_len, b), dtype=np.float64)
    gae = np.zeros(b, dtype=np.float64)
    next_values = bootstrap_values.astype(np.float64)
    for t in range(t_len - 1, -1, -1):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_values * live - values[t]
        gae = delta + gamma * lam * live * gae
        advantages[t] = gae
        next_values = values[t]
    return advantages, advantages + values
