"""Clipped-surrogate policy loss with exact gradients w.r.t. network outputs.

The diagonal-Gaussian policy has a state-independent log standard deviation,
so its entropy depends only on that parameter.  The loss gradients here are
derived by hand and feed backward_sequence as (d_values, d_means, d_log_std);
a finite-difference harness in the tests validates the chain end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)


def gaussian_logp(actions: np.ndarray, means: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Log density of a diagonal Gaussian; reduces the last axis."""
    z = (actions - means) * np.exp(-log_std)
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(log_std) - 0.5 * actions.shape[-1] * LOG_2PI


def gaussian_entropy(log_std: np.ndarray) -> float:
    return float(np.sum(log_std + 0.5 * (1.0 + LOG_2PI)))


@dataclass
class PpoLossResult:
    total: float
    policy_loss: float
    value_loss: float
    entropy: float
    clip_frac: float
    approx_kl: float
    d_values: np.ndarray  # (T, B)
    d_means: np.ndarray  # (T, B, 2)
    d_log_std: np.ndarray  # (2,)


def ppo_loss(
    values: np.ndarray,
    means: np.ndarray,
    log_std: np.ndarray,
    actions: np.ndarray,
    old_logps: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    clip_eps: float,
    value_coef: float,
    entropy_coef: float,
) -> PpoLossResult:
    """Loss value plus its exact gradients w.r.t. the network outputs.

    All (T, B)-shaped inputs are one minibatch; advantages arrive already
    normalized by the caller.
    """
    n = values.size
    logps = gaussian_logp(actions, means, log_std)
    ratio = np.exp(logps - old_logps)
    clipped = np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
    surr = ratio * advantages
    surr_clipped = clipped * advantages
    policy_loss = -float(np.mean(np.minimum(surr, surr_clipped)))

    verr = values - returns
    value_loss = float(np.mean(verr * verr))
    ent = gaussian_entropy(log_std)
    total = policy_loss + value_coef * value_loss - entropy_coef * ent

    # The unclipped branch is active wherever it attains the min; only there
    # does the gradient flow through ratio.
    active = (surr <= surr_clipped).astype(np.float64)
    d_logp = -(1.0 / n) * active * ratio * advantages

    inv_var = np.exp(-2.0 * log_std)
    diff = actions - means
    # dlogp/dmean_i = (a_i - mu_i) e^{-2 s_i}; dlogp/ds_i = (a_i - mu_i)^2 e^{-2 s_i} - 1
    d_means = d_logp[..., None] * diff * inv_var
    d_log_std = np.sum(d_logp[..., None] * (diff * diff * inv_var - 1.0), axis=(0, 1))
    d_log_std = d_log_std - entropy_coef  # d(-c_e * entropy)/ds_i = -c_e
    d_values = value_coef * (2.0 / n) * verr

    clip_frac = float(np.mean((np.abs(ratio - 1.0) > clip_eps).astype(np.float64)))
    approx_kl = float(np.mean(old_logps - logps))
    return PpoLossResult(
        total=total,
        policy_loss=policy_loss,
        value_loss=value_loss,
        entropy=ent,
        clip_frac=clip_frac,
        approx_kl=approx_kl,
        d_values=d_values,
        d_means=d_means,
        d_log_std=d_log_std,
    )
