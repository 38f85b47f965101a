"""Core state types for the 2D crowd simulator.

All positions are meters in a fixed world frame, velocities m/s, headings
radians.  States are plain dataclasses of Python floats so that snapshots
serialize exactly through JSON (float round-trips are lossless via repr).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from ..config import ScenarioConfig

ROBOT_NODE_DIM = 9  # (px, py, vx, vy, gx, gy, v_max, theta, radius)
EDGE_DIM = 2


@dataclass
class HumanState:
    px: float
    py: float
    vx: float
    vy: float
    gx: float
    gy: float
    v_max: float
    radius: float

    def pos(self) -> np.ndarray:
        return np.array([self.px, self.py], dtype=np.float64)

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> "HumanState":
        return cls(**d)


@dataclass
class RobotState:
    px: float
    py: float
    vx: float
    vy: float
    gx: float
    gy: float
    v_max: float
    theta: float  # heading, radians
    radius: float  # also the goal-reached tolerance

    def pos(self) -> np.ndarray:
        return np.array([self.px, self.py], dtype=np.float64)

    def node_array(self) -> np.ndarray:
        """The 9-dim feature vector consumed by policies, in pinned order."""
        return np.array(
            [self.px, self.py, self.vx, self.vy, self.gx, self.gy,
             self.v_max, self.theta, self.radius],
            dtype=np.float64,
        )

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> "RobotState":
        return cls(**d)


class Terminal(str, Enum):
    REACH_GOAL = "reach_goal"
    COLLISION = "collision"
    TIMEOUT = "timeout"


@dataclass
class StepOutcome:
    """Result of one environment transition."""

    reward: float
    terminal: Terminal | None
    d_min: float  # closest surface-to-surface robot-human distance, +inf if no humans
    d_goal: float  # robot center to goal distance


@dataclass
class WorldState:
    """Full simulator state.  Human index order is stable over an episode;
    in group scenarios the first ``config.n_static()`` humans are the
    stationary ring members."""

    robot: RobotState
    humans: list[HumanState]
    t: int
    config: ScenarioConfig

    def n_humans(self) -> int:
        return len(self.humans)

    def human_positions(self) -> np.ndarray:
        out = np.empty((len(self.humans), 2), dtype=np.float64)
        for i, h in enumerate(self.humans):
            out[i, 0] = h.px
            out[i, 1] = h.py
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "robot": self.robot.to_dict(),
            "humans": [h.to_dict() for h in self.humans],
            "t": self.t,
            "config": dataclasses.asdict(self.config),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "WorldState":
        return cls(
            robot=RobotState.from_dict(d["robot"]),
            humans=[HumanState.from_dict(h) for h in d["humans"]],
            t=int(d["t"]),
            config=ScenarioConfig(**d["config"]),
        )


class ScenarioGenerationError(RuntimeError):
    """Rejection sampling could not place all agents."""


class EpisodeTerminatedError(RuntimeError):
    """step() was called on an episode that already ended."""
