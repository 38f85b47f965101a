"""Holonomic point-mass kinematics shared by the robot and all humans.

An action is a velocity command (ax, ay).  The commanded velocity is
attained immediately (clipped to the agent's speed limit) and position
integrates with explicit Euler over one control interval:

    v[t+1] = clip_speed(a, v_max)
    p[t+1] = p[t] + v[t+1] * dt
"""

from __future__ import annotations

import dataclasses
import math

from .types import HumanState, RobotState


def clip_speed(ax: float, ay: float, v_max: float) -> tuple[float, float]:
    """Scale (ax, ay) down to magnitude v_max if it exceeds it."""
    speed = math.hypot(ax, ay)
    if speed > v_max:
        scale = v_max / speed
        return ax * scale, ay * scale
    return ax, ay


def step_kinematics(state, action, dt: float):
    """Advance one agent state by one control interval.

    Args:
        state: RobotState or HumanState.
        action: length-2 velocity command (any indexable pair of floats).
        dt: control interval in seconds, > 0.

    Returns:
        A new state of the same type.  For the robot, heading follows the
        new velocity direction and is kept when the robot stands still.
    """
    ax = float(action[0])
    ay = float(action[1])
    if not (math.isfinite(ax) and math.isfinite(ay)):
        raise ValueError(f"non-finite action ({ax}, {ay})")
    vx, vy = clip_speed(ax, ay, state.v_max)
    px = state.px + vx * dt
    py = state.py + vy * dt
    if isinstance(state, RobotState):
        theta = math.atan2(vy, vx) if (vx != 0.0 or vy != 0.0) else state.theta
        return dataclasses.replace(state, px=px, py=py, vx=vx, vy=vy, theta=theta)
    return dataclasses.replace(state, px=px, py=py, vx=vx, vy=vy)
