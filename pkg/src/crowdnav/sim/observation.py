"""Robot observations with a limited field of view and belief extrapolation.

The robot only reads human positions, and only inside its field of view.
For every human the observer keeps a last-seen cache (position, velocity
estimate, timestamp).  Visible humans refresh the cache, with velocity
estimated by finite differences over the elapsed time since the previous
sighting.  Out-of-view humans are believed to continue at the cached
velocity from the cached position.

All arrays in an Observation are freshly allocated: mutating them never
touches the world state or the cache that produced them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import WorldState


@dataclass
class LastSeen:
    """Per-human sighting cache. Arrays are (n, 2), (n, 2), (n,)."""

    pos: np.ndarray
    vel: np.ndarray
    t: np.ndarray

    def copy(self) -> "LastSeen":
        return LastSeen(self.pos.copy(), self.vel.copy(), self.t.copy())

    @classmethod
    def initial(cls, world: WorldState) -> "LastSeen":
        """Seed the cache from spawn: every human sighted once, at rest."""
        n = world.n_humans()
        return cls(
            pos=world.human_positions(),
            vel=np.zeros((n, 2), dtype=np.float64),
            t=np.full(n, world.t, dtype=np.int64),
        )


@dataclass
class Observation:
    """What a policy sees at one timestep."""

    robot_node: np.ndarray  # (9,) px, py, vx, vy, gx, gy, v_max, theta, radius
    spatial_edges: np.ndarray  # (n, 2) believed human position minus robot position
    temporal_edge: np.ndarray  # (2,) robot velocity
    visible: np.ndarray  # (n,) bool, geometric visibility this step
    last_seen: LastSeen  # cache state after this observation

    def n_humans(self) -> int:
        return self.spatial_edges.shape[0]

    def believed_positions(self) -> np.ndarray:
        return self.spatial_edges + self.robot_node[:2]


def wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def visibility(world: WorldState, fov_deg: float) -> np.ndarray:
    """Boolean mask: which humans fall inside the robot's view cone."""
    r = world.robot
    half = math.radians(fov_deg) / 2.0
    out = np.zeros(world.n_humans(), dtype=bool)
    for i, h in enumerate(world.humans):
        bearing = math.atan2(h.py - r.py, h.px - r.px)
        out[i] = abs(wrap_angle(bearing - r.theta)) <= half
    return out


def observe(world: WorldState, last_seen: LastSeen) -> Observation:
    """Build the robot's observation of ``world`` and the refreshed cache.

    Args:
        world: current simulator state (robot heading already updated).
        last_seen: cache from the previous observation; not mutated.

    Returns:
        Observation with a new cache.  Spatial edge rows keep human index
        order.
    """
    cfg = world.config
    r = world.robot
    n = world.n_humans()
    vis = visibility(world, cfg.fov_deg)

    pos = last_seen.pos.copy()
    vel = last_seen.vel.copy()
    seen_t = last_seen.t.copy()
    believed = np.empty((n, 2), dtype=np.float64)
    for i, h in enumerate(world.humans):
        if vis[i]:
            elapsed = (world.t - seen_t[i]) * cfg.dt
            if elapsed > 0.0:
                vel[i, 0] = (h.px - pos[i, 0]) / elapsed
                vel[i, 1] = (h.py - pos[i, 1]) / elapsed
            pos[i, 0] = h.px
            pos[i, 1] = h.py
            seen_t[i] = world.t
            believed[i, 0] = h.px
            believed[i, 1] = h.py
        else:
            elapsed = (world.t - seen_t[i]) * cfg.dt
            believed[i, 0] = pos[i, 0] + vel[i, 0] * elapsed
            believed[i, 1] = pos[i, 1] + vel[i, 1] * elapsed

    spatial = believed.copy()
    spatial[:, 0] -= r.px
    spatial[:, 1] -= r.py
    return Observation(
        robot_node=r.node_array(),
        spatial_edges=spatial,
        temporal_edge=np.array([r.vx, r.vy], dtype=np.float64),
        visible=vis,
        last_seen=LastSeen(pos, vel, seen_t),
    )


def initial_observation(world: WorldState) -> Observation:
    """Observation at reset.

    The cache is seeded with every human's spawn position (velocity
    estimate zero) so that spatial edges are defined from the first step
    even for humans outside the initial view cone; the ``visible`` mask
    still reports true geometric visibility.
    """
    return observe(world, LastSeen.initial(world))
