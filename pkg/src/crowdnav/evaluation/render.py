"""Deterministic SVG rendering of recorded episodes.

The output is a pure function of the tracks and scenario settings: fixed
float formatting, no timestamps, no randomness, so a rendered episode can be
diffed byte for byte. Track polylines carry countable CSS classes
(track-robot, track-human) for tests and quick DOM inspection.
"""

from __future__ import annotations

import math

from ..sim.trajectory import Track, TrajectoryRecord, record_goals, tracks_from_record

VIEW_HALF = 7.0  # world metres from center to frame edge
SCALE = 40.0  # pixels per metre
SIZE = int(2 * VIEW_HALF * SCALE)

ROBOT_COLOR = "#c0392b"
HUMAN_COLOR = "#2c6fbb"
STATIC_COLOR = "#7f8c8d"
GOAL_COLOR = "#27ae60"


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _px(x: float) -> str:
    return _fmt((x + VIEW_HALF) * SCALE)


def _py(y: float) -> str:
    # SVG y grows downward; world y grows upward
    return _fmt((VIEW_HALF - y) * SCALE)


def _polyline(track: Track, cls: str, color: str, width: float) -> str:
    pts = " ".join(f"{_px(x)},{_py(y)}" for x, y in zip(track.xs, track.ys))
    return (
        f'<polyline class="{cls}" points="{pts}" fill="none" '
        f'stroke="{color}" stroke-width="{_fmt(width)}" stroke-opacity="0.8"/>'
    )


def _circle(x: float, y: float, r: float, fill: str, cls: str, opacity: float = 1.0) -> str:
    return (
        f'<circle class="{cls}" cx="{_px(x)}" cy="{_py(y)}" r="{_fmt(r * SCALE)}" '
        f'fill="{fill}" fill-opacity="{_fmt(opacity)}"/>'
    )


def _star(x: float, y: float, r: float, color: str) -> str:
    cx = (x + VIEW_HALF) * SCALE
    cy = (VIEW_HALF - y) * SCALE
    pts = []
    for i in range(10):
        ang = math.pi / 2 + i * math.pi / 5
        rad = (r if i % 2 == 0 else 0.45 * r) * SCALE
        pts.append(f"{_fmt(cx + rad * math.cos(ang))},{_fmt(cy - rad * math.sin(ang))}")
    return f'<polygon class="goal-star" points="{" ".join(pts)}" fill="{color}"/>'


def _fov_wedge(x: float, y: float, theta: float, fov_deg: float, reach: float) -> str:
    half = math.radians(fov_deg) / 2.0
    a0, a1 = theta - half, theta + half
    x0, y0 = x + reach * math.cos(a0), y + reach * math.sin(a0)
    x1, y1 = x + reach * math.cos(a1), y + reach * math.sin(a1)
    large = 1 if fov_deg > 180.0 else 0
    # sweep=0 walks counterclockwise in world coordinates (y is flipped)
    return (
        f'<path class="fov-wedge" d="M {_px(x)} {_py(y)} L {_px(x0)} {_py(y0)} '
        f'A {_fmt(reach * SCALE)} {_fmt(reach * SCALE)} 0 {large} 0 '
        f'{_px(x1)} {_py(y1)} Z" fill="#f1c40f" fill-opacity="0.15" '
        f'stroke="#f1c40f" stroke-width="1.000"/>'
    )


def _heading(track: Track) -> float:
    for vx, vy in zip(reversed(track.vxs), reversed(track.vys)):
        if vx != 0.0 or vy != 0.0:
            return math.atan2(vy, vx)
    return 0.0


def render_tracks(
    tracks: list[Track],
    fov_deg: float = 360.0,
    goals: list[tuple[float, float]] | None = None,
    n_static: int = 0,
) -> str:
    """SVG text for a set of tracks. tracks[0] must be the robot (agent 0)."""
    if not tracks or tracks[0].agent_id != 0:
        raise ValueError("tracks must start with the robot (agent_id 0)")
    robot = tracks[0]
    humans = tracks[1:]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect width="{SIZE}" height="{SIZE}" fill="#fbfbf8"/>',
        f'<circle cx="{_px(0.0)}" cy="{_py(0.0)}" r="{_fmt(6.0 * SCALE)}" fill="none" '
        f'stroke="#d5d8dc" stroke-width="1.000" stroke-dasharray="6.000 6.000"/>',
    ]
    for i, h in enumerate(humans):
        static = i < n_static
        color = STATIC_COLOR if static else HUMAN_COLOR
        if not static:
            parts.append(_polyline(h, "track-human", color, 1.5))
        if h.xs:
            parts.append(_circle(h.xs[0], h.ys[0], 0.06, color, "start-marker"))
            parts.append(_circle(h.xs[-1], h.ys[-1], h.radius, color, "agent-human", 0.35))
    if robot.xs:
        if fov_deg < 360.0:
            theta = _heading(robot)
            parts.append(_fov_wedge(robot.xs[-1], robot.ys[-1], theta, fov_deg, 2.5))
        parts.append(_polyline(robot, "track-robot", ROBOT_COLOR, 2.5))
        parts.append(_circle(robot.xs[0], robot.ys[0], 0.08, ROBOT_COLOR, "start-marker"))
        parts.append(_circle(robot.xs[-1], robot.ys[-1], robot.radius, ROBOT_COLOR, "agent-robot", 0.55))
    for gx, gy in goals or []:
        parts.append(_star(gx, gy, 0.22, GOAL_COLOR))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_record(record: TrajectoryRecord) -> str:
    tracks = tracks_from_record(record)
    cfg = record.config
    n_static = cfg.n_static() if cfg.env_kind == "group" else 0
    return render_tracks(
        tracks,
        fov_deg=cfg.fov_deg,
        goals=record_goals(record),
        n_static=n_static,
    )


def save_svg(svg: str, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(svg)
