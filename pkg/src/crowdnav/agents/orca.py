"""Reciprocal collision avoidance via pairwise half-plane constraints.

For every neighbor the velocity obstacle (truncated cone) is computed and
a half-plane of permitted velocities is derived, with each agent taking
half the responsibility for avoidance (line.point = v + u/2).  The new
velocity is the point of the feasible region closest to the preferred
velocity, found with an incremental two-variable linear program clamped
to the max-speed disk; when constraints are infeasible a fallback LP
minimizes the largest constraint violation instead.

Scalar Python floats throughout: the solver is branch-heavy and exact
sign symmetry matters (two mirrored agents must compute exactly mirrored
velocities), which negation-symmetric float arithmetic provides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..config import OrcaConfig

EPS = 1e-10


@dataclass
class Body:
    """The slice of an agent's state that collision avoidance reads."""

    px: float
    py: float
    vx: float
    vy: float
    radius: float


@dataclass
class Line:
    """Directed line: permitted velocities lie to its left."""

    point: tuple[float, float]
    direction: tuple[float, float]


def _det(a: tuple[float, float], b: tuple[float, float]) -> float:
    return a[0] * b[1] - a[1] * b[0]


def _dot(a: tuple[float, float], b: tuple[float, float]) -> float:
    return a[0] * b[0] + a[1] * b[1]


def _norm(a: tuple[float, float]) -> float:
    return math.hypot(a[0], a[1])


def orca_lines(
    body: Body,
    neighbors: list[Body],
    cfg: OrcaConfig,
    dt: float,
) -> list[Line]:
    """One half-plane constraint per considered neighbor.

    Neighbors outside cfg.neighbor_dist are ignored; the closest
    cfg.max_neighbors are kept.
    """
    cand: list[tuple[float, Body]] = []
    for other in neighbors:
        d2 = (other.px - body.px) ** 2 + (other.py - body.py) ** 2
        if d2 < cfg.neighbor_dist * cfg.neighbor_dist:
            cand.append((d2, other))
    cand.sort(key=lambda pair: pair[0])
    cand = cand[: cfg.max_neighbors]

    inv_tau = 1.0 / cfg.time_horizon
    lines: list[Line] = []
    for dist_sq, other in cand:
        rel_pos = (other.px - body.px, other.py - body.py)
        rel_vel = (body.vx - other.vx, body.vy - other.vy)
        combined = body.radius + other.radius + cfg.safety_buffer
        combined_sq = combined * combined

        if dist_sq > combined_sq:
            # Not currently colliding: truncated cone with horizon tau.
            w = (rel_vel[0] - inv_tau * rel_pos[0], rel_vel[1] - inv_tau * rel_pos[1])
            w_len_sq = _dot(w, w)
            dot1 = _dot(w, rel_pos)
            if dot1 < 0.0 and dot1 * dot1 > combined_sq * w_len_sq:
                # Project on the cutoff circle.
                w_len = math.sqrt(w_len_sq)
                unit_w = (w[0] / w_len, w[1] / w_len)
                direction = (unit_w[1], -unit_w[0])
                u_scale = combined * inv_tau - w_len
                u = (u_scale * unit_w[0], u_scale * unit_w[1])
            else:
                # Project on the nearer leg of the cone.
                leg = math.sqrt(dist_sq - combined_sq)
                if _det(rel_pos, w) > 0.0:
                    direction = (
                        (rel_pos[0] * leg - rel_pos[1] * combined) / dist_sq,
                        (rel_pos[0] * combined + rel_pos[1] * leg) / dist_sq,
                    )
                else:
                    direction = (
                        -(rel_pos[0] * leg + rel_pos[1] * combined) / dist_sq,
                        -(-rel_pos[0] * combined + rel_pos[1] * leg) / dist_sq,
                    )
                dot2 = _dot(rel_vel, direction)
                u = (dot2 * direction[0] - rel_vel[0], dot2 * direction[1] - rel_vel[1])
        else:
            # Already overlapping: resolve within one control interval.
            inv_dt = 1.0 / dt
            w = (rel_vel[0] - inv_dt * rel_pos[0], rel_vel[1] - inv_dt * rel_pos[1])
            w_len = _norm(w)
            if w_len > EPS:
                unit_w = (w[0] / w_len, w[1] / w_len)
            else:
                # Degenerate: relative velocity sits exactly at the cone
                # center. Push straight apart (or along +x if coincident).
                d = math.sqrt(dist_sq)
                unit_w = (-rel_pos[0] / d, -rel_pos[1] / d) if d > EPS else (1.0, 0.0)
            direction = (unit_w[1], -unit_w[0])
            u_scale = combined * inv_dt - w_len
            u = (u_scale * unit_w[0], u_scale * unit_w[1])

        lines.append(
            Line(
                point=(body.vx + 0.5 * u[0], body.vy + 0.5 * u[1]),
                direction=direction,
            )
        )
    return lines


def orca_velocity(
    body: Body,
    v_max: float,
    pref_vel: tuple[float, float],
    neighbors: list[Body],
    cfg: OrcaConfig,
    dt: float,
) -> tuple[float, float]:
    """New velocity: feasible point closest to pref_vel, speed <= v_max."""
    lines = orca_lines(body, neighbors, cfg, dt)
    fail, result = _lp2(lines, v_max, pref_vel, False)
    if fail < len(lines):
        result = _lp3(lines, fail, v_max, result)
    return result


def _lp1(
    lines: list[Line],
    line_no: int,
    radius: float,
    opt_vel: tuple[float, float],
    direction_opt: bool,
) -> tuple[bool, tuple[float, float]]:
    """Optimize along lines[line_no] subject to the earlier lines and the disk."""
    line = lines[line_no]
    dot_product = _dot(line.point, line.direction)
    discriminant = dot_product * dot_product + radius * radius - _dot(line.point, line.point)
    if discriminant < 0.0:
        return False, (0.0, 0.0)
    sqrt_disc = math.sqrt(discriminant)
    t_left = -dot_product - sqrt_disc
    t_right = -dot_product + sqrt_disc

    for i in range(line_no):
        denominator = _det(line.direction, lines[i].direction)
        numerator = _det(
            lines[i].direction,
            (line.point[0] - lines[i].point[0], line.point[1] - lines[i].point[1]),
        )
        if abs(denominator) <= EPS:
            if numerator < 0.0:
                return False, (0.0, 0.0)
            continue
        t = numerator / denominator
        if denominator >= 0.0:
            t_right = min(t_right, t)
        else:
            t_left = max(t_left, t)
        if t_left > t_right:
            return False, (0.0, 0.0)

    if direction_opt:
        if _dot(opt_vel, line.direction) > 0.0:
            t = t_right
        else:
            t = t_left
    else:
        t = _dot(
            line.direction,
            (opt_vel[0] - line.point[0], opt_vel[1] - line.point[1]),
        )
        t = max(t_left, min(t_right, t))
    return True, (line.point[0] + t * line.direction[0], line.point[1] + t * line.direction[1])


def _lp2(
    lines: list[Line],
    radius: float,
    opt_vel: tuple[float, float],
    direction_opt: bool,
) -> tuple[int, tuple[float, float]]:
    """Incremental LP over all lines. Returns (first failing index or len, velocity)."""
    if direction_opt:
        # opt_vel is a unit direction: start at the disk boundary.
        result = (opt_vel[0] * radius, opt_vel[1] * radius)
    elif _dot(opt_vel, opt_vel) > radius * radius:
        norm = _norm(opt_vel)
        result = (opt_vel[0] / norm * radius, opt_vel[1] / norm * radius)
    else:
        result = opt_vel

    for i, line in enumerate(lines):
        violated = _det(
            line.direction,
            (line.point[0] - result[0], line.point[1] - result[1]),
        )
        if violated > 0.0:
            ok, new_result = _lp1(lines, i, radius, opt_vel, direction_opt)
            if not ok:
                return i, result
            result = new_result
    return len(lines), result


def _lp3(
    lines: list[Line],
    begin_line: int,
    radius: float,
    result: tuple[float, float],
) -> tuple[float, float]:
    """Infeasible fallback: minimize the largest violation across lines."""
    distance = 0.0
    for i in range(begin_line, len(lines)):
        line = lines[i]
        violation = _det(
            line.direction,
            (line.point[0] - result[0], line.point[1] - result[1]),
        )
        if violation > distance:
            proj_lines: list[Line] = []
            for j in range(i):
                denominator = _det(line.direction, lines[j].direction)
                if abs(denominator) <= EPS:
                    if _dot(line.direction, lines[j].direction) > 0.0:
                        continue  # same direction: j is redundant here
                    point = (
                        0.5 * (line.point[0] + lines[j].point[0]),
                        0.5 * (line.point[1] + lines[j].point[1]),
                    )
                else:
                    scale = (
                        _det(
                            lines[j].direction,
                            (
                                line.point[0] - lines[j].point[0],
                                line.point[1] - lines[j].point[1],
                            ),
                        )
                        / denominator
                    )
                    point = (
                        line.point[0] + scale * line.direction[0],
                        line.point[1] + scale * line.direction[1],
                    )
                diff = (
                    lines[j].direction[0] - line.direction[0],
                    lines[j].direction[1] - line.direction[1],
                )
                diff_norm = _norm(diff)
                proj_lines.append(
                    Line(point, (diff[0] / diff_norm, diff[1] / diff_norm))
                )
            temp = result
            fail, result = _lp2(
                proj_lines,
                radius,
                (-line.direction[1], line.direction[0]),
                True,
            )
            if fail < len(proj_lines):
                # Numerically unreachable per construction; keep last result.
                result = temp
            distance = _det(
                line.direction,
                (line.point[0] - result[0], line.point[1] - result[1]),
            )
    return result


def pref_velocity_to_goal(
    px: float, py: float, gx: float, gy: float, v_max: float, dt: float
) -> tuple[float, float]:
    """Full speed toward the goal, easing off to land on it within one step."""
    dx = gx - px
    dy = gy - py
    dist = math.hypot(dx, dy)
    if dist <= v_max * dt:
        if dt <= 0.0 or dist == 0.0:
            return 0.0, 0.0
        return dx / dt, dy / dt
    return dx / dist * v_max, dy / dist * v_max
