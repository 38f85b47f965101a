"""Fixed-size rollout storage for recurrent PPO: (T, B) blocks plus the
hidden-state snapshot entering the block."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..policy.network import HiddenState, SequenceInputs


@dataclass
class RolloutBuffer:
    robot_nodes: np.ndarray  # (T, B, 9)
    spatial_edges: np.ndarray  # (T, B, n, 2)
    temporal_edges: np.ndarray  # (T, B, 2)
    actions: np.ndarray  # (T, B, 2)
    logps: np.ndarray  # (T, B)
    values: np.ndarray  # (T, B)
    rewards: np.ndarray  # (T, B)
    dones: np.ndarray  # (T, B) 1.0 where the episode ended at step t
    h0: HiddenState  # state entering step 0 (post-reset snapshot)
    bootstrap_values: np.ndarray = field(default_factory=lambda: np.zeros(0))  # (B,)

    @classmethod
    def zeros(cls, t_len: int, b: int, n: int, d_rnn: int) -> "RolloutBuffer":
        return cls(
            robot_nodes=np.zeros((t_len, b, 9)),
            spatial_edges=np.zeros((t_len, b, n, 2)),
            temporal_edges=np.zeros((t_len, b, 2)),
            actions=np.zeros((t_len, b, 2)),
            logps=np.zeros((t_len, b)),
            values=np.zeros((t_len, b)),
            rewards=np.zeros((t_len, b)),
            dones=np.zeros((t_len, b)),
            h0=HiddenState.zeros(b, n, d_rnn),
            bootstrap_values=np.zeros(b),
        )

    @property
    def t_len(self) -> int:
        return self.robot_nodes.shape[0]

    @property
    def batch(self) -> int:
        return self.robot_nodes.shape[1]

    def masks(self) -> np.ndarray:
        """masks[t] = 1 - dones[t-1]; masks[0] = 1 because h0 is snapped
        after any reset that ended the previous block."""
        m = np.ones((self.t_len, self.batch))
        m[1:] = 1.0 - self.dones[:-1]
        return m

    def sequence_inputs(self, env_idx: np.ndarray) -> SequenceInputs:
        """The forward-pass inputs for a subset of environments."""
        return SequenceInputs(
            robot_node=self.robot_nodes[:, env_idx],
            spatial_edges=self.spatial_edges[:, env_idx],
            temporal_edge=self.temporal_edges[:, env_idx],
            masks=self.masks()[:, env_idx],
            h0=self.h0.rows(env_idx),
        )
