"""Robot controllers: the learned recurrent policy plus scripted baselines.

Every controller maps an Observation to a velocity command (2,). Baselines
work from the robot's beliefs (last-seen extrapolation), not ground truth,
so they face the same partial observability as the learned policy.
"""

from __future__ import annotations

import numpy as np

from ..agents.orca import Body, orca_velocity, pref_velocity_to_goal
from ..agents.social_force import social_force_velocity
from ..config import NetworkConfig, OrcaConfig, SocialForceConfig
from ..sim.observation import Observation
from .network import HiddenState, StepInputs, forward_step

# Baselines cannot read true human radii off an Observation, so they assume
# the most conservative radius in the supported range.
ASSUMED_HUMAN_RADIUS = 0.5


class Controller:
    """Base interface: call reset() at episode start, then act() per step."""

    def reset(self) -> None:  # pragma: no cover - trivial default
        pass

    def act(self, obs: Observation) -> np.ndarray:
        raise NotImplementedError


def _robot_body(obs: Observation) -> tuple[Body, float, tuple[float, float], float]:
    node = obs.robot_node
    body = Body(px=node[0], py=node[1], vx=node[2], vy=node[3], radius=node[8])
    return body, float(node[6]), (float(node[4]), float(node[5])), float(node[7])


def _believed_bodies(obs: Observation, radius: float) -> list[Body]:
    pos = obs.believed_positions()
    vel = obs.last_seen.vel
    return [
        Body(px=pos[i, 0], py=pos[i, 1], vx=vel[i, 0], vy=vel[i, 1], radius=radius)
        for i in range(obs.n_humans())
    ]


class StraightController(Controller):
    """Full speed straight at the goal, ignoring everyone."""

    def __init__(self, dt: float):
        self.dt = dt

    def act(self, obs: Observation) -> np.ndarray:
        body, v_max, goal, _ = _robot_body(obs)
        return np.array(pref_velocity_to_goal(body.px, body.py, goal[0], goal[1], v_max, self.dt))


class OrcaController(Controller):
    """Reciprocal collision avoidance against believed human states."""

    def __init__(self, dt: float, cfg: OrcaConfig | None = None,
                 assumed_radius: float = ASSUMED_HUMAN_RADIUS):
        self.dt = dt
        self.cfg = cfg if cfg is not None else OrcaConfig()
        self.assumed_radius = assumed_radius

    def act(self, obs: Observation) -> np.ndarray:
        body, v_max, goal, _ = _robot_body(obs)
        pref = pref_velocity_to_goal(body.px, body.py, goal[0], goal[1], v_max, self.dt)
        neighbors = _believed_bodies(obs, self.assumed_radius)
        return np.array(orca_velocity(body, v_max, pref, neighbors, self.cfg, self.dt))


class SocialForceController(Controller):
    """Goal attraction plus exponential repulsion from believed humans."""

    def __init__(self, dt: float, cfg: SocialForceConfig | None = None,
                 assumed_radius: float = ASSUMED_HUMAN_RADIUS):
        self.dt = dt
        self.cfg = cfg if cfg is not None else SocialForceConfig()
        self.assumed_radius = assumed_radius

    def act(self, obs: Observation) -> np.ndarray:
        body, v_max, goal, _ = _robot_body(obs)
        neighbors = _believed_bodies(obs, self.assumed_radius)
        return np.array(
            social_force_velocity(body, v_max, goal, neighbors, self.cfg, self.dt)
        )


class LearnedController(Controller):
    """Wraps a trained policy for single-episode rollout (batch of one)."""

    def __init__(self, params: dict[str, np.ndarray], network: NetworkConfig,
                 n_humans: int, deterministic: bool = True,
                 rng: np.random.Generator | None = None):
        self.params = params
        self.network = network
        self.n_humans = n_humans
        self.deterministic = deterministic
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.hidden = HiddenState.zeros(1, n_humans, network.d_rnn)
        self.last_attention: np.ndarray | None = None

    def reset(self) -> None:
        self.hidden = HiddenState.zeros(1, self.n_humans, self.network.d_rnn)

    def act(self, obs: Observation) -> np.ndarray:
        if obs.n_humans() != self.n_humans:
            raise ValueError(
                f"controller built for {self.n_humans} humans, got {obs.n_humans()}"
            )
        inputs = StepInputs(
            robot_node=obs.robot_node[None, :],
            spatial_edges=obs.spatial_edges[None, :, :],
            temporal_edge=obs.temporal_edge[None, :],
        )
        out, self.hidden, _ = forward_step(self.params, self.network.arch, inputs, self.hidden)
        self.last_attention = out.attention[0].copy()
        action = out.action_mean[0]
        if not self.deterministic:
            action = action + np.exp(out.log_std) * self.rng.standard_normal(2)
        return action.copy()


def make_controller(name: str, dt: float, *, params=None, network=None,
                    n_humans: int = 0, deterministic: bool = True,
                    rng: np.random.Generator | None = None,
                    orca_cfg: OrcaConfig | None = None,
                    sf_cfg: SocialForceConfig | None = None) -> Controller:
    if name == "straight":
        return StraightController(dt)
    if name == "orca":
        return OrcaController(dt, orca_cfg)
    if name == "social_force":
        return SocialForceController(dt, sf_cfg)
    if name == "learned":
        if params is None or network is None:
            raise ValueError("learned controller needs params and a network config")
        return LearnedController(params, network, n_humans, deterministic, rng)
    raise ValueError(f"unknown controller {name!r}")
