"""Recurrent PPO on vectorized crowd simulators.

Collection runs num_envs simulators in lockstep for num_steps frames per
update, snapshotting the recurrent state at the segment start so the update
phase can replay the exact forward pass.  Episode ends inside a segment zero
the hidden rows immediately; the stored masks reproduce the same zeroing
during the update replay, so collection and optimization see identical
recurrences.

Updates run several epochs over the segment, each epoch splitting the
environments into minibatches (sequences stay whole; only the batch axis is
split).  Advantages are normalized once per update over the whole segment.

Checkpoints come in threes: parameters (binary), optimizer moments (binary),
and a JSON state file carrying RNG states, environment snapshots, hidden
state, and episode accumulators, which together make resume exact.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..config import RunConfig
from ..policy.checkpoint import (
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
    validate_params,
)
from ..policy.network import HiddenState, StepInputs, backward_sequence, forward_sequence, forward_step
from ..policy.params import init_params
from ..sim.env import CrowdSim
from ..sim.types import Terminal
from .adam import AdamState, adam_step, clip_grad_norm
from .buffer import RolloutBuffer
from .gae import compute_advantages
from .losses import gaussian_logp, ppo_loss

ACTION_STREAM = 4
PERM_STREAM = 5

METRICS_COLUMNS = [
    "update_idx",
    "env_steps",
    "mean_reward",
    "success_rate",
    "policy_loss",
    "value_loss",
    "entropy",
    "clip_frac",
]

WINDOW = 100  # episodes in the running success/reward window


@dataclass
class UpdateMetrics:
    update_idx: int
    env_steps: int
    mean_reward: float
    success_rate: float
    policy_loss: float
    value_loss: float
    entropy: float
    clip_frac: float

    def row(self) -> list[str]:
        return [
            str(self.update_idx),
            str(self.env_steps),
            repr(self.mean_reward),
            repr(self.success_rate),
            repr(self.policy_loss),
            repr(self.value_loss),
            repr(self.entropy),
            repr(self.clip_frac),
        ]


class Trainer:
    def __init__(self, cfg: RunConfig, run_dir: str):
        cfg.validate()
        self.cfg = cfg
        self.run_dir = run_dir
        ppo = cfg.ppo
        self.n_humans = cfg.scenario.n_humans
        self.params = init_params(cfg.network, seed=ppo.seed)
        self.adam = AdamState.zeros(self.params)
        self.envs = [
            CrowdSim(cfg.scenario, cfg.agents, seed=ppo.seed * ppo.num_envs + e)
            for e in range(ppo.num_envs)
        ]
        self.action_rng = np.random.default_rng([ppo.seed, ACTION_STREAM])
        self.perm_rng = np.random.default_rng([ppo.seed, PERM_STREAM])
        self.hidden = HiddenState.zeros(ppo.num_envs, self.n_humans, cfg.network.d_rnn)
        self._obs = [env.reset() for env in self.envs]
        self.update_idx = 0
        self.env_steps = 0
        self.ep_return = np.zeros(ppo.num_envs)
        self.ep_length = np.zeros(ppo.num_envs, dtype=np.int64)
        self.window: deque = deque(maxlen=WINDOW)  # (return, success, length)
        self.metrics: list[UpdateMetrics] = []

    # ------------------------------------------------------------------
    # rollout collection

    def _step_inputs(self) -> StepInputs:
        return StepInputs(
            robot_node=np.stack([o.robot_node for o in self._obs]),
            spatial_edges=np.stack([o.spatial_edges for o in self._obs]),
            temporal_edge=np.stack([o.temporal_edge for o in self._obs]),
        )

    def collect(self) -> RolloutBuffer:
        ppo = self.cfg.ppo
        t_len, b = ppo.num_steps, ppo.num_envs
        buf = RolloutBuffer.zeros(t_len, b, self.n_humans, self.cfg.network.d_rnn)
        buf.h0 = self.hidden.copy()
        arch = self.cfg.network.arch
        for t in range(t_len):
            inputs = self._step_inputs()
            out, self.hidden, _ = forward_step(self.params, arch, inputs, self.hidden)
            noise = self.action_rng.standard_normal((b, 2))
            actions = out.action_mean + np.exp(out.log_std) * noise
            buf.robot_nodes[t] = inputs.robot_node
            buf.spatial_edges[t] = inputs.spatial_edges
            buf.temporal_edges[t] = inputs.temporal_edge
            buf.actions[t] = actions
            buf.logps[t] = gaussian_logp(actions, out.action_mean, out.log_std)
            buf.values[t] = out.value
            for e, env in enumerate(self.envs):
                obs, outcome, _ = env.step(actions[e])
                buf.rewards[t, e] = outcome.reward
                self.ep_return[e] += outcome.reward
                self.ep_length[e] += 1
                if outcome.terminal is not None:
                    buf.dones[t, e] = 1.0
                    if outcome.terminal is Terminal.TIMEOUT:
                        # Timeout truncates an episode the agent cannot see
                        # ending (no clock in the observation), so bootstrap
                        # through it: fold gamma * V(final obs) into the
                        # reward instead of treating the cut as V = 0.
                        # Collisions and goals remain true terminals.
                        term = StepInputs(
                            robot_node=obs.robot_node[None, :],
                            spatial_edges=obs.spatial_edges[None, :, :],
                            temporal_edge=obs.temporal_edge[None, :],
                        )
                        peek, _, _ = forward_step(
                            self.params, arch, term, self.hidden.rows(np.array([e]))
                        )
                        buf.rewards[t, e] += ppo.gamma * float(peek.value[0])
                    self.window.append(
                        (
                            float(self.ep_return[e]),
                            1.0 if outcome.terminal is Terminal.REACH_GOAL else 0.0,
                            int(self.ep_length[e]),
                        )
                    )
                    self.ep_return[e] = 0.0
                    self.ep_length[e] = 0
                    obs = env.reset()
                    self.hidden.set_row_zero(e)
                self._obs[e] = obs
            self.env_steps += b
        # Value of the state after the segment, for GAE bootstrap. This
        # forward is a peek: it must not advance the recurrent state.
        out, _, _ = forward_step(self.params, arch, self._step_inputs(), self.hidden)
        buf.bootstrap_values = out.value.copy()
        return buf

    # ------------------------------------------------------------------
    # optimization

    def update(self, buf: RolloutBuffer) -> UpdateMetrics:
        ppo = self.cfg.ppo
        arch = self.cfg.network.arch
        advantages, returns = compute_advantages(
            buf.rewards, buf.values, buf.dones, buf.bootstrap_values,
            ppo.gamma, ppo.gae_lambda,
        )
        norm_adv = (advantages - advantages.mean()) / (advantages.std() + 1e-8)

        mb_size = ppo.num_envs // ppo.num_minibatches
        sums = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "clip_frac": 0.0}
        count = 0
        for _ in range(ppo.epochs):
            perm = self.perm_rng.permutation(ppo.num_envs)
            for k in range(ppo.num_minibatches):
                idx = perm[k * mb_size : (k + 1) * mb_size]
                seq = buf.sequence_inputs(idx)
                result = forward_sequence(self.params, arch, seq, want_cache=True)
                loss = ppo_loss(
                    result.values,
                    result.action_means,
                    result.log_std,
                    buf.actions[:, idx],
                    buf.logps[:, idx],
                    norm_adv[:, idx],
                    returns[:, idx],
                    ppo.clip_eps,
                    ppo.value_coef,
                    ppo.entropy_coef,
                )
                grads = backward_sequence(
                    self.params, arch, seq, result,
                    loss.d_values, loss.d_means, loss.d_log_std,
                )
                clip_grad_norm(grads, ppo.max_grad_norm)
                adam_step(self.params, grads, self.adam, ppo.lr)
                sums["policy_loss"] += loss.policy_loss
                sums["value_loss"] += loss.value_loss
                sums["entropy"] += loss.entropy
                sums["clip_frac"] += loss.clip_frac
                count += 1

        self.update_idx += 1
        if self.window:
            mean_reward = float(np.mean([w[0] for w in self.window]))
            success_rate = float(np.mean([w[1] for w in self.window]))
        else:
            mean_reward = math.nan
            success_rate = math.nan
        metrics = UpdateMetrics(
            update_idx=self.update_idx,
            env_steps=self.env_steps,
            mean_reward=mean_reward,
            success_rate=success_rate,
            policy_loss=sums["policy_loss"] / count,
            value_loss=sums["value_loss"] / count,
            entropy=sums["entropy"] / count,
            clip_frac=sums["clip_frac"] / count,
        )
        self.metrics.append(metrics)
        return metrics

    # ------------------------------------------------------------------
    # training loop

    def n_updates(self) -> int:
        per_update = self.cfg.ppo.num_envs * self.cfg.ppo.num_steps
        return math.ceil(self.cfg.ppo.total_steps / per_update)

    def train(self, log=None) -> None:
        target = self.n_updates()
        interval = self.cfg.ppo.checkpoint_interval
        while self.update_idx < target:
            buf = self.collect()
            metrics = self.update(buf)
            self._append_metrics(metrics)
            if log is not None:
                log(metrics)
            if interval > 0 and self.update_idx % interval == 0:
                self.save()
        self.save()

    # ------------------------------------------------------------------
    # metrics file

    def metrics_path(self) -> str:
        return os.path.join(self.run_dir, "metrics.csv")

    def _append_metrics(self, metrics: UpdateMetrics) -> None:
        os.makedirs(self.run_dir, exist_ok=True)
        path = self.metrics_path()
        fresh = not os.path.exists(path)
        with open(path, "a", newline="") as fh:
            writer = csv.writer(fh)
            if fresh:
                writer.writerow(METRICS_COLUMNS)
            writer.writerow(metrics.row())

    def _truncate_metrics(self, keep_up_to: int) -> None:
        path = self.metrics_path()
        if not os.path.exists(path):
            return
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            return
        header, body = rows[0], rows[1:]
        kept = [r for r in body if int(r[0]) <= keep_up_to]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(kept)

    # ------------------------------------------------------------------
    # checkpointing

    def _ckpt_path(self, k: int) -> str:
        return os.path.join(self.run_dir, f"checkpoint_{k}.ckpt")

    def _optim_path(self, k: int) -> str:
        return os.path.join(self.run_dir, f"optimizer_{k}.ckpt")

    def _state_path(self, k: int) -> str:
        return os.path.join(self.run_dir, f"state_{k}.json")

    def save(self) -> str:
        k = self.update_idx
        os.makedirs(self.run_dir, exist_ok=True)
        save_checkpoint(
            self._ckpt_path(k), self.params, self.cfg.network,
            extra={"update_idx": k, "env_steps": self.env_steps},
        )
        moments = {f"m.{n}": a for n, a in self.adam.m.items()}
        moments.update({f"v.{n}": a for n, a in self.adam.v.items()})
        save_checkpoint(
            self._optim_path(k), moments, self.cfg.network,
            extra={"step": self.adam.step},
        )
        state = {
            "update_idx": k,
            "env_steps": self.env_steps,
            "action_rng": self.action_rng.bit_generator.state,
            "perm_rng": self.perm_rng.bit_generator.state,
            "envs": [env.snapshot() for env in self.envs],
            "hidden": {
                "h_spatial": self.hidden.h_spatial.tolist(),
                "h_temporal": self.hidden.h_temporal.tolist(),
                "h_node": self.hidden.h_node.tolist(),
            },
            "ep_return": self.ep_return.tolist(),
            "ep_length": self.ep_length.tolist(),
            "window": [list(w) for w in self.window],
        }
        with open(self._state_path(k), "w") as fh:
            json.dump(state, fh)
        return self._ckpt_path(k)

    @staticmethod
    def latest_checkpoint(run_dir: str) -> int:
        best = -1
        if os.path.isdir(run_dir):
            for name in os.listdir(run_dir):
                m = re.fullmatch(r"checkpoint_(\d+)\.ckpt", name)
                if m:
                    best = max(best, int(m.group(1)))
        if best < 0:
            raise CheckpointError(f"no checkpoints found in {run_dir}")
        return best

    @classmethod
    def resume(cls, cfg: RunConfig, run_dir: str, update_idx: int | None = None) -> "Trainer":
        """Rebuild a trainer mid-run so training continues exactly where it
        stopped; metrics rows past the checkpoint are discarded."""
        k = Trainer.latest_checkpoint(run_dir) if update_idx is None else update_idx
        trainer = cls(cfg, run_dir)
        params, network, extra = load_checkpoint(trainer._ckpt_path(k))
        if (network.arch, network.d_rnn, network.d_embed, network.d_k) != (
            cfg.network.arch, cfg.network.d_rnn, cfg.network.d_embed, cfg.network.d_k,
        ):
            raise CheckpointError(
                f"checkpoint architecture {network} does not match run config {cfg.network}"
            )
        validate_params(params, cfg.network, where=trainer._ckpt_path(k))
        trainer.params = params

        moments, _, mextra = load_checkpoint(trainer._optim_path(k))
        trainer.adam = AdamState(
            m={n: moments[f"m.{n}"] for n in params},
            v={n: moments[f"v.{n}"] for n in params},
            step=int(mextra["step"]),
        )

        with open(trainer._state_path(k)) as fh:
            state = json.load(fh)
        trainer.update_idx = int(state["update_idx"])
        trainer.env_steps = int(state["env_steps"])
        trainer.action_rng.bit_generator.state = state["action_rng"]
        trainer.perm_rng.bit_generator.state = state["perm_rng"]
        for env, snap in zip(trainer.envs, state["envs"]):
            env.restore(snap)
        trainer._obs = [env.observation() for env in trainer.envs]
        trainer.hidden = HiddenState(
            h_spatial=np.array(state["hidden"]["h_spatial"], dtype=np.float64).reshape(
                cfg.ppo.num_envs, trainer.n_humans, cfg.network.d_rnn
            ),
            h_temporal=np.array(state["hidden"]["h_temporal"], dtype=np.float64),
            h_node=np.array(state["hidden"]["h_node"], dtype=np.float64),
        )
        trainer.ep_return = np.array(state["ep_return"], dtype=np.float64)
        trainer.ep_length = np.array(state["ep_length"], dtype=np.int64)
        trainer.window = deque(
            [(float(r), float(s), int(l)) for r, s, l in state["window"]], maxlen=WINDOW
        )
        trainer._truncate_metrics(k)
        return trainer
