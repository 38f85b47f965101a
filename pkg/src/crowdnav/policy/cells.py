"""Gated recurrent cell with explicit forward caches and manual backward.

Gate layout along the last axis is [reset | update | candidate], each
``d_hidden`` wide.  Input and hidden projections carry separate biases so
the reset gate multiplies the whole hidden-side candidate preactivation
(W_hn h + b_hn):

    gi = x W_x + b_x              gh = h W_h + b_h
    r  = sigmoid(gi_r + gh_r)     z = sigmoid(gi_z + gh_z)
    c  = tanh(gi_n + r * gh_n)
    h' = (1 - z) * c + z * h

All arrays are float64 and 2D (batch, features); callers flatten any
leading structure.  The backward pass consumes the cache produced by the
matching forward call and returns exact gradients for inputs, previous
hidden state, and all four parameter tensors.
"""

from __future__ import annotations

import numpy as np


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def gru_forward(
    x: np.ndarray,
    h: np.ndarray,
    w_x: np.ndarray,
    w_h: np.ndarray,
    b_x: np.ndarray,
    b_h: np.ndarray,
) -> tuple[np.ndarray, tuple]:
    """One cell step.

    Args:
        x: (B, d_in) inputs.
        h: (B, d_hidden) previous hidden state.
        w_x: (d_in, 3*d_hidden), w_h: (d_hidden, 3*d_hidden).
        b_x, b_h: (3*d_hidden,).

    Returns:
        (h_new, cache) with h_new (B, d_hidden).
    """
    d = h.shape[1]
    gi = x @ w_x + b_x
    gh = h @ w_h + b_h
    r = sigmoid(gi[:, :d] + gh[:, :d])
    z = sigmoid(gi[:, d:2 * d] + gh[:, d:2 * d])
    gh_n = gh[:, 2 * d:]
    c = np.tanh(gi[:, 2 * d:] + r * gh_n)
    h_new = (1.0 - z) * c + z * h
    cache = (x, h, r, z, c, gh_n)
    return h_new, cache


def gru_backward(
    dh_new: np.ndarray,
    cache: tuple,
    w_x: np.ndarray,
    w_h: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backprop one cell step.

    Args:
        dh_new: (B, d_hidden) gradient w.r.t. the step's output.
        cache: from gru_forward.

    Returns:
        (dx, dh, dw_x, dw_h, db_x, db_h); dh is the gradient w.r.t. the
        previous hidden state (including the direct h' = z*h path).
    """
    x, h, r, z, c, gh_n = cache
    dc = dh_new * (1.0 - z)
    dz = dh_new * (h - c)
    dh = dh_new * z

    da_c = dc * (1.0 - c * c)
    dr = da_c * gh_n
    da_r = dr * r * (1.0 - r)
    da_z = dz * z * (1.0 - z)

    dgi = np.concatenate([da_r, da_z, da_c], axis=1)
    dgh = np.concatenate([da_r, da_z, da_c * r], axis=1)

    dw_x = x.T @ dgi
    dw_h = h.T @ dgh
    db_x = dgi.sum(axis=0)
    db_h = dgh.sum(axis=0)
    dx = dgi @ w_x.T
    dh = dh + dgh @ w_h.T
    return dx, dh, dw_x, dw_h, db_x, db_h


def linear_tanh_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, tuple]:
    """y = tanh(x W + b) on 2D input; cache keeps x and y."""
    y = np.tanh(x @ w + b)
    return y, (x, y)


def linear_tanh_backward(dy: np.ndarray, cache: tuple, w: np.ndarray):
    x, y = cache
    da = dy * (1.0 - y * y)
    return da @ w.T, x.T @ da, da.sum(axis=0)
