"""Recurrent crowd-navigation policies: forward, BPTT backward, losses.

Two architectures share this module (see params.py).  Both consume, per
timestep and per batch row:

    robot_node     (9,)   px, py, vx, vy, gx, gy, v_max, theta, radius
    spatial_edges  (n, 2) believed human positions relative to the robot
    temporal_edge  (2,)   robot velocity

and produce a state value, a Gaussian action mean (the log standard
deviation is a state-independent learnable parameter), and the attention
distribution over humans.

The ``st_graph`` factor graph runs one shared recurrent cell over every
human edge, one over the robot's own motion, then attends from the human
hiddens (queries) to the motion hidden (key) with a crowd-size-scaled
dot product, softmax((n / sqrt(d_k)) Q K^T).  The pooled crowd vector and
an embedding of the robot node drive the node cell whose hidden feeds the
value and policy heads.

``rnn_attn`` ablates the edge recurrences: humans and robot are embedded
feedforward, pooled by the same attention, and only the node cell is
recurrent (with identical dimensions).

Everything is float64 numpy with explicit caches; backward passes mirror
the forward graph exactly, which a finite-difference harness checks in
the test suite.  Hidden-state masking implements episode boundaries: a
mask of 0 entering step t cuts both the forward carry and the backward
gradient, so frames after a reset never influence the previous episode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .cells import (
    gru_backward,
    gru_forward,
    linear_tanh_backward,
    linear_tanh_forward,
)

ARCHS = ("st_graph", "rnn_attn")

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class HiddenState:
    """Recurrent state. rnn_attn only advances h_node; the edge hiddens
    stay zero so buffers have one layout for both architectures."""

    h_spatial: np.ndarray  # (B, n, d_rnn)
    h_temporal: np.ndarray  # (B, d_rnn)
    h_node: np.ndarray  # (B, d_rnn)

    @classmethod
    def zeros(cls, batch: int, n_humans: int, d_rnn: int) -> "HiddenState":
        return cls(
            h_spatial=np.zeros((batch, n_humans, d_rnn)),
            h_temporal=np.zeros((batch, d_rnn)),
            h_node=np.zeros((batch, d_rnn)),
        )

    def copy(self) -> "HiddenState":
        return HiddenState(self.h_spatial.copy(), self.h_temporal.copy(), self.h_node.copy())

    def masked(self, mask: np.ndarray) -> "HiddenState":
        """Scale each batch row by mask (0 resets an episode's memory)."""
        return HiddenState(
            h_spatial=self.h_spatial * mask[:, None, None],
            h_temporal=self.h_temporal * mask[:, None],
            h_node=self.h_node * mask[:, None],
        )

    def rows(self, idx: np.ndarray) -> "HiddenState":
        return HiddenState(
            self.h_spatial[idx].copy(), self.h_temporal[idx].copy(), self.h_node[idx].copy()
        )

    def set_row_zero(self, i: int) -> None:
        self.h_spatial[i] = 0.0
        self.h_temporal[i] = 0.0
        self.h_node[i] = 0.0


@dataclass
class StepInputs:
    """One timestep of observations, batched."""

    robot_node: np.ndarray  # (B, 9)
    spatial_edges: np.ndarray  # (B, n, 2)
    temporal_edge: np.ndarray  # (B, 2)


@dataclass
class PolicyOutput:
    value: np.ndarray  # (B,)
    action_mean: np.ndarray  # (B, 2)
    log_std: np.ndarray  # (2,)
    attention: np.ndarray  # (B, n)


@dataclass
class SequenceInputs:
    """A (T, B) block of frames plus the hidden state entering frame 0.

    masks[t, b] scales the hidden state entering step t: 1 continues the
    episode, 0 starts a fresh one (the frame after a done).  masks[0]
    should be 1; h0 is already the post-reset snapshot.
    """

    robot_node: np.ndarray  # (T, B, 9)
    spatial_edges: np.ndarray  # (T, B, n, 2)
    temporal_edge: np.ndarray  # (T, B, 2)
    masks: np.ndarray  # (T, B)
    h0: HiddenState


@dataclass
class SequenceResult:
    values: np.ndarray  # (T, B)
    action_means: np.ndarray  # (T, B, 2)
    log_std: np.ndarray  # (2,)
    attentions: np.ndarray  # (T, B, n)
    final_hidden: HiddenState
    caches: list = field(repr=False, default_factory=list)


def _attention_scale(n: int, d_k: int) -> float:
    return n / math.sqrt(d_k)


# ---------------------------------------------------------------------------
# single-step forward


def forward_step(
    params: dict[str, np.ndarray],
    arch: str,
    inputs: StepInputs,
    hidden: HiddenState,
    want_cache: bool = False,
) -> tuple[PolicyOutput, HiddenState, dict[str, Any] | None]:
    if arch == "st_graph":
        return _forward_st_graph(params, inputs, hidden, want_cache)
    if arch == "rnn_attn":
        return _forward_rnn_attn(params, inputs, hidden, want_cache)
    raise ValueError(f"unknown arch {arch!r}")


def _attend(h_set: np.ndarray, key_src: np.ndarray, w_q: np.ndarray, w_k: np.ndarray, d_k: int):
    """softmax((n/sqrt(d_k)) * Q K^T) pooling of h_set (B, n, d) keyed by key_src (B, dk_in)."""
    b, n, d = h_set.shape
    if n == 0:
        alpha = np.zeros((b, 0))
        pooled = np.zeros((b, d))
        return alpha, pooled, None
    q = h_set @ w_q  # (B, n, d_k)
    k = key_src @ w_k  # (B, d_k)
    scale = _attention_scale(n, d_k)
    logits = np.einsum("bnk,bk->bn", q, k) * scale
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    alpha = ex / ex.sum(axis=1, keepdims=True)
    pooled = np.einsum("bn,bnd->bd", alpha, h_set)
    cache = (q, k, alpha, h_set, key_src, scale)
    return alpha, pooled, cache


def _attend_backward(d_alpha_ext, d_pooled, cache, w_q, w_k):
    """Gradients of the attention pooling. d_alpha_ext may be None."""
    q, k, alpha, h_set, key_src, scale = cache
    d_alpha = np.einsum("bd,bnd->bn", d_pooled, h_set)
    if d_alpha_ext is not None:
        d_alpha = d_alpha + d_alpha_ext
    d_h_set = alpha[:, :, None] * d_pooled[:, None, :]
    # softmax backward
    inner = (d_alpha * alpha).sum(axis=1, keepdims=True)
    d_logits = alpha * (d_alpha - inner)
    d_qk = d_logits * scale  # (B, n)
    d_q = d_qk[:, :, None] * k[:, None, :]  # (B, n, d_k)
    d_k_vec = np.einsum("bn,bnk->bk", d_qk, q)
    d_h_set = d_h_set + d_q @ w_q.T
    d_w_q = np.einsum("bnd,bnk->dk", h_set, d_q)
    d_key_src = d_k_vec @ w_k.T
    d_w_k = key_src.T @ d_k_vec
    return d_h_set, d_key_src, d_w_q, d_w_k


def _heads(params, h_node):
    value = h_node @ params["value.w"] + params["value.b"]
    mean = h_node @ params["policy.w"] + params["policy.b"]
    return value[:, 0], mean


def _heads_backward(params, h_node, d_value, d_mean, grads):
    dv = d_value[:, None]
    grads["value.w"] += h_node.T @ dv
    grads["value.b"] += dv.sum(axis=0)
    grads["policy.w"] += h_node.T @ d_mean
    grads["policy.b"] += d_mean.sum(axis=0)
    return dv @ params["value.w"].T + d_mean @ params["policy.w"].T


def _forward_st_graph(params, inputs, hidden, want_cache):
    b, n, _ = inputs.spatial_edges.shape
    d = hidden.h_node.shape[1]
    d_k = params["attn.w_q"].shape[1]

    if n > 0:
        edges_flat = inputs.spatial_edges.reshape(b * n, 2)
        h_s_flat = hidden.h_spatial.reshape(b * n, d)
        e_s, c_embed_s = linear_tanh_forward(
            edges_flat, params["embed_spatial.w"], params["embed_spatial.b"]
        )
        h_s_new_flat, c_rnn_s = gru_forward(
            e_s, h_s_flat,
            params["rnn_spatial.w_x"], params["rnn_spatial.w_h"],
            params["rnn_spatial.b_x"], params["rnn_spatial.b_h"],
        )
        h_s_new = h_s_new_flat.reshape(b, n, d)
    else:
        c_embed_s = c_rnn_s = None
        h_s_new = hidden.h_spatial.copy()

    e_t, c_embed_t = linear_tanh_forward(
        inputs.temporal_edge, params["embed_temporal.w"], params["embed_temporal.b"]
    )
    h_t_new, c_rnn_t = gru_forward(
        e_t, hidden.h_temporal,
        params["rnn_temporal.w_x"], params["rnn_temporal.w_h"],
        params["rnn_temporal.b_x"], params["rnn_temporal.b_h"],
    )

    alpha, pooled, c_attn = _attend(h_s_new, h_t_new, params["attn.w_q"], params["attn.w_k"], d_k)

    cat_edge = np.concatenate([pooled, h_t_new], axis=1)  # (B, 2d)
    e_edge, c_embed_e = linear_tanh_forward(
        cat_edge, params["embed_edge.w"], params["embed_edge.b"]
    )
    e_node, c_embed_n = linear_tanh_forward(
        inputs.robot_node, params["embed_node.w"], params["embed_node.b"]
    )
    cat_node = np.concatenate([e_edge, e_node], axis=1)
    h_n_new, c_rnn_n = gru_forward(
        cat_node, hidden.h_node,
        params["rnn_node.w_x"], params["rnn_node.w_h"],
        params["rnn_node.b_x"], params["rnn_node.b_h"],
    )

    value, mean = _heads(params, h_n_new)
    out = PolicyOutput(value, mean, params["policy.log_std"].copy(), alpha)
    new_hidden = HiddenState(h_s_new, h_t_new, h_n_new)
    cache = None
    if want_cache:
        cache = {
            "n": n, "b": b, "d": d,
            "c_embed_s": c_embed_s, "c_rnn_s": c_rnn_s,
            "c_embed_t": c_embed_t, "c_rnn_t": c_rnn_t,
            "c_attn": c_attn,
            "c_embed_e": c_embed_e, "c_embed_n": c_embed_n,
            "c_rnn_n": c_rnn_n,
            "h_s_new": h_s_new, "h_t_new": h_t_new, "h_n_new": h_n_new,
        }
    return out, new_hidden, cache


def _backward_st_graph(params, cache, d_value, d_mean, d_hidden, grads):
    """One-step backward. d_hidden carries gradients w.r.t. this step's
    output hiddens from the future; returns gradients w.r.t. the input
    hiddens (post-mask)."""
    n, d = cache["n"], cache["d"]
    b = cache["b"]

    d_h_node_new = _heads_backward(params, cache["h_n_new"], d_value, d_mean, grads)
    d_h_node_new = d_h_node_new + d_hidden.h_node

    d_cat_node, d_h_node_prev, dw, dwh, dbx, dbh = gru_backward(
        d_h_node_new, cache["c_rnn_n"], params["rnn_node.w_x"], params["rnn_node.w_h"]
    )
    grads["rnn_node.w_x"] += dw
    grads["rnn_node.w_h"] += dwh
    grads["rnn_node.b_x"] += dbx
    grads["rnn_node.b_h"] += dbh

    e = params["embed_edge.b"].shape[0]
    d_e_edge = d_cat_node[:, :e]
    d_e_node = d_cat_node[:, e:]

    d_cat_edge, dw, db = linear_tanh_backward(d_e_edge, cache["c_embed_e"], params["embed_edge.w"])
    grads["embed_edge.w"] += dw
    grads["embed_edge.b"] += db
    _, dw, db = linear_tanh_backward(d_e_node, cache["c_embed_n"], params["embed_node.w"])
    grads["embed_node.w"] += dw
    grads["embed_node.b"] += db

    d_pooled = d_cat_edge[:, :d]
    d_h_temporal_new = d_cat_edge[:, d:]

    if n > 0:
        d_h_s_new, d_key, d_w_q, d_w_k = _attend_backward(
            None, d_pooled, cache["c_attn"], params["attn.w_q"], params["attn.w_k"]
        )
        grads["attn.w_q"] += d_w_q
        grads["attn.w_k"] += d_w_k
        d_h_temporal_new = d_h_temporal_new + d_key
        d_h_s_new = d_h_s_new + d_hidden.h_spatial
    else:
        d_h_s_new = d_hidden.h_spatial

    d_h_temporal_new = d_h_temporal_new + d_hidden.h_temporal
    d_e_t, d_h_temporal_prev, dw, dwh, dbx, dbh = gru_backward(
        d_h_temporal_new, cache["c_rnn_t"], params["rnn_temporal.w_x"], params["rnn_temporal.w_h"]
    )
    grads["rnn_temporal.w_x"] += dw
    grads["rnn_temporal.w_h"] += dwh
    grads["rnn_temporal.b_x"] += dbx
    grads["rnn_temporal.b_h"] += dbh
    _, dw, db = linear_tanh_backward(d_e_t, cache["c_embed_t"], params["embed_temporal.w"])
    grads["embed_temporal.w"] += dw
    grads["embed_temporal.b"] += db

    if n > 0:
        d_h_s_flat = d_h_s_new.reshape(b * n, d)
        d_e_s, d_h_s_prev_flat, dw, dwh, dbx, dbh = gru_backward(
            d_h_s_flat, cache["c_rnn_s"], params["rnn_spatial.w_x"], params["rnn_spatial.w_h"]
        )
        grads["rnn_spatial.w_x"] += dw
        grads["rnn_spatial.w_h"] += dwh
        grads["rnn_spatial.b_x"] += dbx
        grads["rnn_spatial.b_h"] += dbh
        _, dw, db = linear_tanh_backward(d_e_s, cache["c_embed_s"], params["embed_spatial.w"])
        grads["embed_spatial.w"] += dw
        grads["embed_spatial.b"] += db
        d_h_spatial_prev = d_h_s_prev_flat.reshape(b, n, d)
    else:
        d_h_spatial_prev = d_h_s_new  # zero-width, passes straight through

    return HiddenState(d_h_spatial_prev, d_h_temporal_prev, d_h_node_prev)


def _forward_rnn_attn(params, inputs, hidden, want_cache):
    b, n, _ = inputs.spatial_edges.shape
    d = hidden.h_node.shape[1]
    d_k = params["attn.w_q"].shape[1]
    e = params["embed_human.b"].shape[0]

    if n > 0:
        edges_flat = inputs.spatial_edges.reshape(b * n, 2)
        f_flat, c_embed_h = linear_tanh_forward(
            edges_flat, params["embed_human.w"], params["embed_human.b"]
        )
        f = f_flat.reshape(b, n, e)
    else:
        c_embed_h = None
        f = np.zeros((b, 0, e))

    g, c_embed_r = linear_tanh_forward(
        inputs.robot_node, params["embed_robot.w"], params["embed_robot.b"]
    )

    alpha, pooled, c_attn = _attend(f, g, params["attn.w_q"], params["attn.w_k"], d_k)

    cat_node = np.concatenate([pooled, g], axis=1)  # (B, 2e)
    h_n_new, c_rnn_n = gru_forward(
        cat_node, hidden.h_node,
        params["rnn_node.w_x"], params["rnn_node.w_h"],
        params["rnn_node.b_x"], params["rnn_node.b_h"],
    )

    value, mean = _heads(params, h_n_new)
    out = PolicyOutput(value, mean, params["policy.log_std"].copy(), alpha)
    new_hidden = HiddenState(hidden.h_spatial.copy(), hidden.h_temporal.copy(), h_n_new)
    cache = None
    if want_cache:
        cache = {
            "n": n, "b": b, "d": d, "e": e,
            "c_embed_h": c_embed_h, "c_embed_r": c_embed_r,
            "c_attn": c_attn, "c_rnn_n": c_rnn_n,
            "h_n_new": h_n_new,
        }
    return out, new_hidden, cache


def _backward_rnn_attn(params, cache, d_value, d_mean, d_hidden, grads):
    n, b, e = cache["n"], cache["b"], cache["e"]

    d_h_node_new = _heads_backward(params, cache["h_n_new"], d_value, d_mean, grads)
    d_h_node_new = d_h_node_new + d_hidden.h_node

    d_cat_node, d_h_node_prev, dw, dwh, dbx, dbh = gru_backward(
        d_h_node_new, cache["c_rnn_n"], params["rnn_node.w_x"], params["rnn_node.w_h"]
    )
    grads["rnn_node.w_x"] += dw
    grads["rnn_node.w_h"] += dwh
    grads["rnn_node.b_x"] += dbx
    grads["rnn_node.b_h"] += dbh

    d_pooled = d_cat_node[:, :e]
    d_g = d_cat_node[:, e:]

    if n > 0:
        d_f, d_key, d_w_q, d_w_k = _attend_backward(
            None, d_pooled, cache["c_attn"], params["attn.w_q"], params["attn.w_k"]
        )
        grads["attn.w_q"] += d_w_q
        grads["attn.w_k"] += d_w_k
        d_g = d_g + d_key
        d_f_flat = d_f.reshape(b * n, e)
        _, dw, db = linear_tanh_backward(d_f_flat, cache["c_embed_h"], params["embed_human.w"])
        grads["embed_human.w"] += dw
        grads["embed_human.b"] += db

    _, dw, db = linear_tanh_backward(d_g, cache["c_embed_r"], params["embed_robot.w"])
    grads["embed_robot.w"] += dw
    grads["embed_robot.b"] += db

    # Edge hiddens are untouched by this architecture: pass gradients through.
    return HiddenState(d_hidden.h_spatial.copy(), d_hidden.h_temporal.copy(), d_h_node_prev)


# ---------------------------------------------------------------------------
# sequence forward / backward


def forward_sequence(
    params: dict[str, np.ndarray],
    arch: str,
    seq: SequenceInputs,
    want_cache: bool = False,
) -> SequenceResult:
    t_len, b = seq.masks.shape
    n = seq.spatial_edges.shape[2]
    values = np.empty((t_len, b))
    means = np.empty((t_len, b, 2))
    alphas = np.empty((t_len, b, n))
    caches: list = []
    hidden = seq.h0.copy()
    for t in range(t_len):
        hidden = hidden.masked(seq.masks[t])
        inputs = StepInputs(
            robot_node=seq.robot_node[t],
            spatial_edges=seq.spatial_edges[t],
            temporal_edge=seq.temporal_edge[t],
        )
        out, hidden, cache = forward_step(params, arch, inputs, hidden, want_cache=want_cache)
        values[t] = out.value
        means[t] = out.action_mean
        alphas[t] = out.attention
        if want_cache:
            caches.append(cache)
    return SequenceResult(
        values=values,
        action_means=means,
        log_std=params["policy.log_std"].copy(),
        attentions=alphas,
        final_hidden=hidden,
        caches=caches,
    )


def backward_sequence(
    params: dict[str, np.ndarray],
    arch: str,
    seq: SequenceInputs,
    result: SequenceResult,
    d_values: np.ndarray,
    d_means: np.ndarray,
    d_log_std: np.ndarray,
) -> dict[str, np.ndarray]:
    """Exact gradients of sum(d_values * values + d_means * means +
    d_log_std * log_std) w.r.t. every parameter, respecting masks."""
    if not result.caches:
        raise ValueError("backward_sequence needs a forward_sequence run with want_cache=True")
    t_len, b = seq.masks.shape
    n = seq.spatial_edges.shape[2]
    d = params["rnn_node.w_h"].shape[0]
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    grads["policy.log_std"] += d_log_std

    step_backward = _backward_st_graph if arch == "st_graph" else _backward_rnn_attn
    d_hidden = HiddenState.zeros(b, n, d)
    for t in range(t_len - 1, -1, -1):
        d_hidden = step_backward(
            params, result.caches[t], d_values[t], d_means[t], d_hidden, grads
        )
        # Gradient w.r.t. the hidden leaving step t-1 passes the mask.
        d_hidden = d_hidden.masked(seq.masks[t])
    return grads
