"""Social-force controller: goal attraction plus exponential repulsion.

The driving force relaxes the current velocity toward the preferred
goal-directed velocity; every neighbor adds a repulsive force along the
separation direction with magnitude A * exp((r_ij - d_ij) / B).  Forces
integrate over one control interval and the resulting velocity is capped
at the agent's speed limit.
"""

from __future__ import annotations

import math

from ..config import SocialForceConfig
from .orca import Body, pref_velocity_to_goal


def social_force_velocity(
    body: Body,
    v_max: float,
    goal: tuple[float, float],
    neighbors: list[Body],
    cfg: SocialForceConfig,
    dt: float,
) -> tuple[float, float]:
    pref_vx, pref_vy = pref_velocity_to_goal(body.px, body.py, goal[0], goal[1], v_max, dt)
    fx = (pref_vx - body.vx) / cfg.relaxation_time
    fy = (pref_vy - body.vy) / cfg.relaxation_time

    for other in neighbors:
        dx = body.px - other.px
        dy = body.py - other.py
        d = math.hypot(dx, dy)
        if d <= 0.0:
            continue  # coincident centers: direction undefined, skip
        r_sum = body.radius + other.radius
        mag = cfg.repulsion_strength * math.exp((r_sum - d) / cfg.repulsion_range)
        fx += mag * dx / d
        fy += mag * dy / d

    vx = body.vx + fx * dt
    vy = body.vy + fy * dt
    speed = math.hypot(vx, vy)
    if speed > v_max:
        vx *= v_max / speed
        vy *= v_max / speed
    return vx, vy
