"""Scenario generation: seeded random spawn layouts for both environments.

Two kinds exist:

* ``fov``: robot and humans spawn on a crossing circle with positional
  jitter; everyone's goal is roughly the antipode of their start.  The
  robot's view cone is limited to ``fov_deg``.
* ``group``: some humans stand in small static rings (chatting groups)
  that never move, the rest cross the circle like in ``fov``.  The robot
  has full view.  The first ``n_static_groups * group_size`` humans in
  the state are the static ones.

Layouts come from rejection sampling with a clearance margin; a layout
that cannot be placed raises ScenarioGenerationError instead of looping
forever.  Generation is a pure function of (config, seed).
"""

from __future__ import annotations

import math

import numpy as np

from ..config import ScenarioConfig
from .types import HumanState, RobotState, ScenarioGenerationError, WorldState

MAX_PLACE_ATTEMPTS = 300

# Seed-stream salts: scenario layout and episode events draw from separate
# streams derived from the same seed, so replaying actions cannot desync
# the layout.
SCENARIO_STREAM = 0
EPISODE_STREAM = 1


def scenario_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), SCENARIO_STREAM])


def episode_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), EPISODE_STREAM])


def _clear(px: float, py: float, others: list[tuple[float, float, float]], own_r: float, margin: float) -> bool:
    """True if (px, py) keeps at least margin from every (x, y, radius) in others."""
    for ox, oy, orad in others:
        if math.hypot(px - ox, py - oy) < own_r + orad + margin:
            return False
    return True


def _circle_endpoints(rng: np.random.Generator, radius: float, jitter_scale: float) -> tuple[float, float, float, float]:
    """Start on the circle, goal near the antipode, both jittered."""
    angle = rng.uniform(0.0, 2.0 * math.pi)
    nx = (rng.random() - 0.5) * jitter_scale
    ny = (rng.random() - 0.5) * jitter_scale
    gx_n = (rng.random() - 0.5) * jitter_scale
    gy_n = (rng.random() - 0.5) * jitter_scale
    px = radius * math.cos(angle) + nx
    py = radius * math.sin(angle) + ny
    gx = -radius * math.cos(angle) + gx_n
    gy = -radius * math.sin(angle) + gy_n
    return px, py, gx, gy


def _place_crossing_human(
    rng: np.random.Generator,
    cfg: ScenarioConfig,
    radius: float,
    v_max: float,
    start_obstacles: list[tuple[float, float, float]],
    goal_obstacles: list[tuple[float, float, float]],
) -> tuple[float, float, float, float]:
    for _ in range(MAX_PLACE_ATTEMPTS):
        px, py, gx, gy = _circle_endpoints(rng, cfg.circle_radius, v_max)
        if not _clear(px, py, start_obstacles, radius, cfg.spawn_margin):
            continue
        if not _clear(gx, gy, goal_obstacles, radius, cfg.spawn_margin):
            continue
        return px, py, gx, gy
    raise ScenarioGenerationError(
        f"could not place a crossing human after {MAX_PLACE_ATTEMPTS} attempts "
        f"(n_humans={cfg.n_humans}, circle_radius={cfg.circle_radius})"
    )


def generate_scenario(config: ScenarioConfig, seed: int | None = None) -> WorldState:
    """Spawn a fresh world.  Same (config, seed) -> identical WorldState."""
    config.validate()
    if seed is None:
        seed = config.rng_seed
    if seed < 0:
        raise ValueError(f"scenario seed must be >= 0, got {seed}")
    rng = scenario_rng(seed)

    rx, ry, rgx, rgy = _circle_endpoints(rng, config.circle_radius, config.robot_v_max)
    robot = RobotState(
        px=rx, py=ry, vx=0.0, vy=0.0, gx=rgx, gy=rgy,
        v_max=config.robot_v_max,
        theta=math.atan2(rgy - ry, rgx - rx),
        radius=config.robot_radius,
    )

    humans: list[HumanState] = []
    # (x, y, radius) lists used for clearance checks
    start_obs = [(rx, ry, config.robot_radius)]
    goal_obs = [(rgx, rgy, config.robot_radius)]

    if config.env_kind == "group":
        humans.extend(_place_static_groups(rng, config, start_obs, goal_obs))
    n_dynamic = config.n_humans - len(humans)

    for _ in range(n_dynamic):
        radius = rng.uniform(config.human_radius_min, config.human_radius_max)
        v_max = rng.uniform(config.human_v_max_min, config.human_v_max_max)
        px, py, gx, gy = _place_crossing_human(rng, config, radius, v_max, start_obs, goal_obs)
        humans.append(HumanState(px=px, py=py, vx=0.0, vy=0.0, gx=gx, gy=gy,
                                 v_max=v_max, radius=radius))
        start_obs.append((px, py, radius))
        goal_obs.append((gx, gy, radius))

    return WorldState(robot=robot, humans=humans, t=0, config=config)


def _place_static_groups(
    rng: np.random.Generator,
    cfg: ScenarioConfig,
    start_obs: list[tuple[float, float, float]],
    goal_obs: list[tuple[float, float, float]],
) -> list[HumanState]:
    """Place rings of stationary humans inside the crossing area.

    Ring members count against both start and goal clearance of everyone
    placed later, and must themselves clear the robot's start and goal.
    """
    humans: list[HumanState] = []
    half_box = cfg.circle_radius / 2.0
    for _ in range(cfg.n_static_groups):
        radii = [rng.uniform(cfg.human_radius_min, cfg.human_radius_max)
                 for _ in range(cfg.group_size)]
        v_maxes = [rng.uniform(cfg.human_v_max_min, cfg.human_v_max_max)
                   for _ in range(cfg.group_size)]
        placed = False
        for _ in range(MAX_PLACE_ATTEMPTS):
            cx = rng.uniform(-half_box, half_box)
            cy = rng.uniform(-half_box, half_box)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            members = []
            ok = True
            for k in range(cfg.group_size):
                ang = phase + 2.0 * math.pi * k / cfg.group_size
                px = cx + cfg.group_ring_radius * math.cos(ang)
                py = cy + cfg.group_ring_radius * math.sin(ang)
                if not (_clear(px, py, start_obs, radii[k], cfg.spawn_margin)
                        and _clear(px, py, goal_obs, radii[k], cfg.spawn_margin)
                        and _clear(px, py, members, radii[k], cfg.spawn_margin)):
                    ok = False
                    break
                members.append((px, py, radii[k]))
            if ok:
                placed = True
                break
        if not placed:
            raise ScenarioGenerationError(
                f"could not place a static group of {cfg.group_size} after "
                f"{MAX_PLACE_ATTEMPTS} attempts"
            )
        for k, (px, py, radius) in enumerate(members):
            humans.append(HumanState(px=px, py=py, vx=0.0, vy=0.0,
                                     gx=px, gy=py, v_max=v_maxes[k], radius=radius))
            start_obs.append((px, py, radius))
            goal_obs.append((px, py, radius))
    return humans


def resample_goal(
    rng: np.random.Generator,
    cfg: ScenarioConfig,
    human: HumanState,
    static_obstacles: list[tuple[float, float, float]],
) -> tuple[float, float]:
    """Draw a fresh crossing goal for a human mid-episode.

    Only static ring members are avoided (moving agents resolve conflicts
    themselves).  Falls back to the last draw if nothing clears, so the
    episode never dies here.
    """
    gx = gy = None
    for _ in range(MAX_PLACE_ATTEMPTS):
        angle = rng.uniform(0.0, 2.0 * math.pi)
        gx_n = (rng.random() - 0.5) * human.v_max
        gy_n = (rng.random() - 0.5) * human.v_max
        gx = cfg.circle_radius * math.cos(angle) + gx_n
        gy = cfg.circle_radius * math.sin(angle) + gy_n
        if _clear(gx, gy, static_obstacles, human.radius, cfg.spawn_margin):
            return gx, gy
    return float(gx), float(gy)
