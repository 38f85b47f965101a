"""Reward function and terminal classification.

The per-step reward is piecewise in the closest robot-human separation
d_min (surface to surface, so negative means overlap) and the distance to
goal, evaluated on the post-step state:

    -20                      if d_min < 0          (collision)
    2.5 * (d_min - 0.25)     if 0 < d_min < 0.25   (discomfort)
    10                       if d_goal <= radius   (goal reached)
    2 * (d_goal_prev - d_goal)   otherwise         (potential shaping)

Cases apply in that order; the inequalities are strict as written, so
d_min == 0 exactly falls through to the goal/shaping cases.  Episode
termination is classified independently of which reward case fired:
collision whenever d_min < 0, else goal whenever d_goal <= radius.
Timeouts are the environment's job (they depend on the horizon, not on
geometry) and carry no extra reward.
"""

from __future__ import annotations

import math

from .types import StepOutcome, Terminal, WorldState

COLLISION_PENALTY = -20.0
DISCOMFORT_DIST = 0.25
DISCOMFORT_FACTOR = 2.5
GOAL_REWARD = 10.0
SHAPING_FACTOR = 2.0


def min_separation(world: WorldState) -> float:
    """Closest surface-to-surface distance between robot and any human.

    Returns +inf when there are no humans.
    """
    r = world.robot
    best = math.inf
    for h in world.humans:
        d = math.hypot(h.px - r.px, h.py - r.py) - r.radius - h.radius
        if d < best:
            best = d
    return best


def goal_distance(world: WorldState) -> float:
    r = world.robot
    return math.hypot(r.gx - r.px, r.gy - r.py)


def compute_reward(prev: WorldState, cur: WorldState) -> StepOutcome:
    """Score the transition prev -> cur.

    The shaping term is the only part that looks at ``prev``.  The returned
    outcome never carries Terminal.TIMEOUT; the environment substitutes it
    when the horizon runs out on a non-terminal step.
    """
    d_min = min_separation(cur)
    d_goal = goal_distance(cur)
    reached = d_goal <= cur.robot.radius

    if d_min < 0.0:
        reward = COLLISION_PENALTY
    elif 0.0 < d_min < DISCOMFORT_DIST:
        reward = DISCOMFORT_FACTOR * (d_min - DISCOMFORT_DIST)
    elif reached:
        reward = GOAL_REWARD
    else:
        reward = SHAPING_FACTOR * (goal_distance(prev) - d_goal)

    if d_min < 0.0:
        terminal: Terminal | None = Terminal.COLLISION
    elif reached:
        terminal = Terminal.REACH_GOAL
    else:
        terminal = None
    return StepOutcome(reward=reward, terminal=terminal, d_min=d_min, d_goal=d_goal)
