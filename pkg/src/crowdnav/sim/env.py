"""Episode-level simulator: scripted humans, robot actions, termination.

One CrowdSim owns one episode at a time.  ``reset`` spawns a scenario
(seeded explicitly, or from the env's master seed stream), ``step``
advances one control interval:

    1. every human controller reads the pre-step state and picks a velocity
       (all agents move synchronously),
    2. the robot action is validated, speed-clipped, and integrated along
       with all humans,
    3. the transition is scored and classified (collision / goal / timeout),
    4. humans that arrived at their goals get fresh ones, and each dynamic
       human may resample its goal with a small probability,
    5. the robot observes the new state with its new heading.

Humans never react to the robot unless ``scenario.humans_see_robot`` is
set; they always react to each other.  Static ring members are ordinary
controlled humans whose goal is their spawn point, so they stay put yet
still resolve interactions, and they are excluded from goal resampling.

The env is deterministic: (config, seed, action sequence) fixes the whole
trajectory, and ``snapshot``/``restore`` round-trip every bit of state
through JSON-safe dicts.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Any

import numpy as np

from ..agents.orca import Body, orca_velocity, pref_velocity_to_goal
from ..agents.social_force import social_force_velocity
from ..config import AgentConfig, ScenarioConfig
from .kinematics import step_kinematics
from .observation import LastSeen, Observation, initial_observation, observe
from .reward import compute_reward
from .scenario import episode_rng, generate_scenario
from .scenario import resample_goal as _resample_goal
from .types import (
    EpisodeTerminatedError,
    StepOutcome,
    Terminal,
    WorldState,
)
from .trajectory import Frame, TrajectoryRecord

ENV_STREAM = 2  # master seed stream salt, distinct from scenario/episode streams

# Training episode seeds are drawn from [2^32, 2^63); explicit evaluation
# seeds are expected below 2^32, so the two sets never overlap.
_SEED_LOW = 2**32
_SEED_HIGH = 2**63


class CrowdSim:
    """One robot among scripted humans on a 2D plane."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        agents: AgentConfig | None = None,
        seed: int | None = None,
        record: bool = False,
    ):
        scenario.validate()
        self.scenario = scenario
        self.agents = agents if agents is not None else AgentConfig()
        self.agents.validate()
        self.record = record
        self._master = np.random.default_rng(
            [seed if seed is not None else scenario.rng_seed, ENV_STREAM]
        )
        self.world: WorldState | None = None
        self._last_seen: LastSeen | None = None
        self._rng: np.random.Generator | None = None
        self._terminal = True
        self._episode_seed: int | None = None
        self._frames: list[Frame] = []

    # ------------------------------------------------------------------
    # episode control

    def reset(self, seed: int | None = None) -> Observation:
        """Start a new episode. Without a seed, one is drawn from the master stream."""
        if seed is None:
            seed = int(self._master.integers(_SEED_LOW, _SEED_HIGH))
        self._episode_seed = int(seed)
        self.world = generate_scenario(self.scenario, self._episode_seed)
        self._rng = episode_rng(self._episode_seed)
        self._terminal = False
        obs = initial_observation(self.world)
        self._last_seen = obs.last_seen
        self._frames = []
        if self.record:
            self._frames.append(self._frame(obs))
        return obs

    def step(self, action) -> tuple[Observation, StepOutcome, WorldState]:
        """Advance one control interval with the given robot velocity command."""
        if self._terminal or self.world is None:
            raise EpisodeTerminatedError("step() after episode end; call reset() first")
        a = np.asarray(action, dtype=np.float64).reshape(-1)
        if a.shape != (2,):
            raise ValueError(f"action must have 2 components, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError(f"non-finite action {a}")

        prev = self.world
        cfg = self.scenario
        commands = [self._human_command(prev, i) for i in range(prev.n_humans())]

        robot = step_kinematics(prev.robot, (float(a[0]), float(a[1])), cfg.dt)
        humans = [step_kinematics(h, c, cfg.dt) for h, c in zip(prev.humans, commands)]
        world = WorldState(robot=robot, humans=humans, t=prev.t + 1, config=cfg)

        outcome = compute_reward(prev, world)
        if outcome.terminal is None and world.t >= cfg.horizon:
            outcome = dataclasses.replace(outcome, terminal=Terminal.TIMEOUT)

        self._update_goals(world)
        self.world = world
        obs = observe(world, self._last_seen)
        self._last_seen = obs.last_seen
        if outcome.terminal is not None:
            self._terminal = True
        elif self.record:
            self._frames.append(self._frame(obs))
        return obs, outcome, world

    def observation(self) -> Observation:
        """Re-derive the current observation (idempotent on the cache)."""
        if self.world is None:
            raise EpisodeTerminatedError("no active episode")
        obs = observe(self.world, self._last_seen)
        self._last_seen = obs.last_seen
        return obs

    @property
    def terminal(self) -> bool:
        return self._terminal

    @property
    def episode_seed(self) -> int | None:
        return self._episode_seed

    # ------------------------------------------------------------------
    # scripted humans

    def _human_command(self, world: WorldState, i: int) -> tuple[float, float]:
        h = world.humans[i]
        body = Body(h.px, h.py, h.vx, h.vy, h.radius)
        neighbors = [
            Body(o.px, o.py, o.vx, o.vy, o.radius)
            for j, o in enumerate(world.humans)
            if j != i
        ]
        if self.scenario.humans_see_robot:
            r = world.robot
            neighbors.append(Body(r.px, r.py, r.vx, r.vy, r.radius))
        if self.agents.human_policy == "orca":
            pref = pref_velocity_to_goal(h.px, h.py, h.gx, h.gy, h.v_max, self.scenario.dt)
            return orca_velocity(body, h.v_max, pref, neighbors, self.agents.orca, self.scenario.dt)
        return social_force_velocity(
            body, h.v_max, (h.gx, h.gy), neighbors, self.agents.social_force, self.scenario.dt
        )

    def _update_goals(self, world: WorldState) -> None:
        """Reassign goals for dynamic humans that arrived (or rarely at random).

        The RNG is consumed in fixed order (one roll per dynamic human per
        step) so trajectories replay exactly for a given action sequence.
        """
        cfg = self.scenario
        n_static = cfg.n_static() if cfg.env_kind == "group" else 0
        static_obstacles = [(h.px, h.py, h.radius) for h in world.humans[:n_static]]
        for i in range(n_static, len(world.humans)):
            h = world.humans[i]
            reached = math.hypot(h.gx - h.px, h.gy - h.py) < h.radius
            roll = self._rng.random()
            if reached or roll < cfg.goal_resample_prob:
                gx, gy = _resample_goal(self._rng, cfg, h, static_obstacles)
                world.humans[i] = dataclasses.replace(h, gx=gx, gy=gy)

    # ------------------------------------------------------------------
    # recording

    def _frame(self, obs: Observation) -> Frame:
        w = self.world
        return Frame(
            t=w.t,
            robot=dataclasses.replace(w.robot),
            humans=[dataclasses.replace(h) for h in w.humans],
            visible=obs.visible.copy(),
        )

    def trajectory(self) -> TrajectoryRecord:
        """Recorded pre-step frames of the current/last episode."""
        if not self.record:
            raise RuntimeError("recording is disabled; construct CrowdSim(record=True)")
        return TrajectoryRecord(frames=list(self._frames), config=self.scenario)

    # ------------------------------------------------------------------
    # snapshot / restore

    def snapshot(self) -> dict[str, Any]:
        """JSON-safe full state (recording buffers are not included)."""
        if self.world is None:
            raise RuntimeError("no active episode to snapshot")
        return {
            "format_version": 1,
            "world": self.world.to_dict(),
            "terminal": self._terminal,
            "episode_seed": self._episode_seed,
            "last_seen": {
                "pos": self._last_seen.pos.tolist(),
                "vel": self._last_seen.vel.tolist(),
                "t": self._last_seen.t.tolist(),
            },
            "episode_rng": self._rng.bit_generator.state,
            "master_rng": self._master.bit_generator.state,
        }

    def restore(self, snap: dict[str, Any]) -> None:
        if snap.get("format_version") != 1:
            raise ValueError(f"unsupported env snapshot version {snap.get('format_version')!r}")
        self.world = WorldState.from_dict(snap["world"])
        self._terminal = bool(snap["terminal"])
        self._episode_seed = snap["episode_seed"]
        ls = snap["last_seen"]
        n = self.world.n_humans()
        self._last_seen = LastSeen(
            pos=np.array(ls["pos"], dtype=np.float64).reshape(n, 2),
            vel=np.array(ls["vel"], dtype=np.float64).reshape(n, 2),
            t=np.array(ls["t"], dtype=np.int64).reshape(n),
        )
        self._rng = episode_rng(0)
        self._rng.bit_generator.state = snap["episode_rng"]
        self._master.bit_generator.state = snap["master_rng"]
        self._frames = []
