"""Parameter initialization and bookkeeping for both policy architectures.

Parameters live in a flat dict name -> float64 ndarray.  Shapes depend
only on the architecture widths, never on the number of humans: the
spatial cell is shared across humans and attention pools a variable-size
set, so crowds of any size run through the same parameter vector.

Architectures:

* ``st_graph``: per-human spatial edge cell (shared), one temporal edge
  cell, attention from spatial hiddens (queries) to the temporal hidden
  (key), then a node cell over [pooled spatial, robot embedding].
* ``rnn_attn``: feedforward embeddings of the human edges and the robot
  node, the same attention pooling, and a single recurrent cell over
  [pooled humans, robot embedding].  Its node cell has exactly the same
  dimensions as st_graph's, so capacity comparisons are apples to apples.
"""

from __future__ import annotations

import math

import numpy as np

from ..config import NetworkConfig
from ..sim.types import EDGE_DIM, ROBOT_NODE_DIM

PARAMS_STREAM = 3  # seed salt for init draws

POLICY_HEAD_GAIN = 0.01  # small first policy outputs; value head keeps gain 1


def orthogonal(rng: np.random.Generator, rows: int, cols: int, gain: float = 1.0) -> np.ndarray:
    """Orthogonal(-ish) matrix via QR of a Gaussian draw, sign-canonical."""
    big, small = max(rows, cols), min(rows, cols)
    a = rng.standard_normal((big, small))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(gain * q[:rows, :cols], dtype=np.float64)


def _gru_block(rng: np.random.Generator, d_in: int, d_hidden: int) -> dict[str, np.ndarray]:
    w_x = np.hstack([orthogonal(rng, d_in, d_hidden) for _ in range(3)])
    w_h = np.hstack([orthogonal(rng, d_hidden, d_hidden) for _ in range(3)])
    return {
        "w_x": w_x,
        "w_h": w_h,
        "b_x": np.zeros(3 * d_hidden),
        "b_h": np.zeros(3 * d_hidden),
    }


def param_shapes(cfg: NetworkConfig) -> dict[str, tuple[int, ...]]:
    """Expected tensor shapes for an architecture, in canonical order."""
    d, e, k = cfg.d_rnn, cfg.d_embed, cfg.d_k
    shapes: dict[str, tuple[int, ...]] = {}
    if cfg.arch == "st_graph":
        shapes["embed_spatial.w"] = (EDGE_DIM, e)
        shapes["embed_spatial.b"] = (e,)
        for n in ("rnn_spatial", "rnn_temporal"):
            d_in = e
            shapes[f"{n}.w_x"] = (d_in, 3 * d)
            shapes[f"{n}.w_h"] = (d, 3 * d)
            shapes[f"{n}.b_x"] = (3 * d,)
            shapes[f"{n}.b_h"] = (3 * d,)
        shapes["embed_temporal.w"] = (EDGE_DIM, e)
        shapes["embed_temporal.b"] = (e,)
        shapes["attn.w_q"] = (d, k)
        shapes["attn.w_k"] = (d, k)
        shapes["embed_edge.w"] = (2 * d, e)
        shapes["embed_edge.b"] = (e,)
        shapes["embed_node.w"] = (ROBOT_NODE_DIM, e)
        shapes["embed_node.b"] = (e,)
        node_in = 2 * e
    else:  # rnn_attn
        shapes["embed_human.w"] = (EDGE_DIM, e)
        shapes["embed_human.b"] = (e,)
        shapes["embed_robot.w"] = (ROBOT_NODE_DIM, e)
        shapes["embed_robot.b"] = (e,)
        shapes["attn.w_q"] = (e, k)
        shapes["attn.w_k"] = (e, k)
        node_in = 2 * e
    shapes["rnn_node.w_x"] = (node_in, 3 * d)
    shapes["rnn_node.w_h"] = (d, 3 * d)
    shapes["rnn_node.b_x"] = (3 * d,)
    shapes["rnn_node.b_h"] = (3 * d,)
    shapes["value.w"] = (d, 1)
    shapes["value.b"] = (1,)
    shapes["policy.w"] = (d, 2)
    shapes["policy.b"] = (2,)
    shapes["policy.log_std"] = (2,)
    return shapes


def init_params(cfg: NetworkConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """Fresh parameters: orthogonal recurrent/embedding weights, zero
    biases, small policy head, log_std 0 (unit standard deviation)."""
    cfg.validate("network")
    rng = np.random.default_rng([int(seed), PARAMS_STREAM])
    d, e, k = cfg.d_rnn, cfg.d_embed, cfg.d_k
    params: dict[str, np.ndarray] = {}

    def linear(name: str, d_in: int, d_out: int, gain: float = 1.0) -> None:
        params[f"{name}.w"] = orthogonal(rng, d_in, d_out, gain)
        params[f"{name}.b"] = np.zeros(d_out)

    def gru(name: str, d_in: int) -> None:
        for key, value in _gru_block(rng, d_in, d).items():
            params[f"{name}.{key}"] = value

    if cfg.arch == "st_graph":
        linear("embed_spatial", EDGE_DIM, e)
        gru("rnn_spatial", e)
        linear("embed_temporal", EDGE_DIM, e)
        gru("rnn_temporal", e)
        params["attn.w_q"] = orthogonal(rng, d, k)
        params["attn.w_k"] = orthogonal(rng, d, k)
        linear("embed_edge", 2 * d, e)
        linear("embed_node", ROBOT_NODE_DIM, e)
        gru("rnn_node", 2 * e)
    elif cfg.arch == "rnn_attn":
        linear("embed_human", EDGE_DIM, e)
        linear("embed_robot", ROBOT_NODE_DIM, e)
        params["attn.w_q"] = orthogonal(rng, e, k)
        params["attn.w_k"] = orthogonal(rng, e, k)
        gru("rnn_node", 2 * e)
    else:
        raise ValueError(f"unknown arch {cfg.arch!r}")

    linear("value", d, 1)
    linear("policy", d, 2, gain=POLICY_HEAD_GAIN)
    params["policy.log_std"] = np.zeros(2)

    expected = param_shapes(cfg)
    assert set(params) == set(expected)
    for name, shape in expected.items():
        assert params[name].shape == shape, (name, params[name].shape, shape)
    return params


def count_params(params: dict[str, np.ndarray]) -> int:
    return sum(int(p.size) for p in params.values())


def zeros_like_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.items()}


def flatten_params(params: dict[str, np.ndarray]) -> np.ndarray:
    """Concatenate in sorted-name order (used by norm computations and tests)."""
    return np.concatenate([params[k].ravel() for k in sorted(params)])


def global_norm(grads: dict[str, np.ndarray]) -> float:
    # Sum in sorted-name order so the result is independent of dict
    # insertion order (a freshly initialized parameter dict and one loaded
    # from a checkpoint must clip identically).
    total = 0.0
    for name in sorted(grads):
        g = grads[name]
        total += float(np.sum(g * g))
    return math.sqrt(total)
