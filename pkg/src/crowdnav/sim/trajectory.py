"""Trajectory recording and CSV round-trip.

A record stores one frame per executed step: the pre-step world state
(so frame t is exactly what the policy saw when choosing action t).  A
k-step episode therefore yields k frames, t = 0 .. k-1.

The CSV layout is one row per agent per frame:

    t,agent_id,px,py,vx,vy,radius,visible

agent_id 0 is the robot (its visible flag is always 1), humans follow in
state order starting at 1.  Floats are written with repr so re-exporting
the same record is byte-identical and values round-trip exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..config import ScenarioConfig
from .types import HumanState, RobotState

CSV_COLUMNS = ["t", "agent_id", "px", "py", "vx", "vy", "radius", "visible"]


@dataclass
class Frame:
    t: int
    robot: RobotState
    humans: list[HumanState]
    visible: np.ndarray  # (n,) bool


@dataclass
class TrajectoryRecord:
    frames: list[Frame]
    config: ScenarioConfig


@dataclass
class Track:
    """One agent's path, as read back from a CSV or built from a record."""

    agent_id: int
    radius: float
    xs: list[float] = field(default_factory=list)
    ys: list[float] = field(default_factory=list)
    vxs: list[float] = field(default_factory=list)
    vys: list[float] = field(default_factory=list)
    visible: list[bool] = field(default_factory=list)


def write_csv(record: TrajectoryRecord, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for frame in record.frames:
            r = frame.robot
            writer.writerow([frame.t, 0, repr(r.px), repr(r.py), repr(r.vx), repr(r.vy),
                             repr(r.radius), 1])
            for i, h in enumerate(frame.humans):
                writer.writerow([frame.t, i + 1, repr(h.px), repr(h.py), repr(h.vx),
                                 repr(h.vy), repr(h.radius), int(frame.visible[i])])


def read_csv(path: str) -> list[Track]:
    """Parse a trajectory CSV into per-agent tracks ordered by time."""
    tracks: dict[int, Track] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected trajectory CSV header {header!r}")
        for row in reader:
            if not row:
                continue
            agent_id = int(row[1])
            track = tracks.get(agent_id)
            if track is None:
                track = Track(agent_id=agent_id, radius=float(row[6]))
                tracks[agent_id] = track
            track.xs.append(float(row[2]))
            track.ys.append(float(row[3]))
            track.vxs.append(float(row[4]))
            track.vys.append(float(row[5]))
            track.visible.append(row[7] == "1")
    return [tracks[k] for k in sorted(tracks)]


def tracks_from_record(record: TrajectoryRecord) -> list[Track]:
    if not record.frames:
        return []
    n = len(record.frames[0].humans)
    tracks = [Track(agent_id=0, radius=record.frames[0].robot.radius)]
    tracks += [Track(agent_id=i + 1, radius=record.frames[0].humans[i].radius)
               for i in range(n)]
    for frame in record.frames:
        r = frame.robot
        tracks[0].xs.append(r.px)
        tracks[0].ys.append(r.py)
        tracks[0].vxs.append(r.vx)
        tracks[0].vys.append(r.vy)
        tracks[0].visible.append(True)
        for i, h in enumerate(frame.humans):
            tracks[i + 1].xs.append(h.px)
            tracks[i + 1].ys.append(h.py)
            tracks[i + 1].vxs.append(h.vx)
            tracks[i + 1].vys.append(h.vy)
            tracks[i + 1].visible.append(bool(frame.visible[i]))
    return tracks


def record_goals(record: TrajectoryRecord) -> list[tuple[float, float]]:
    """Goal markers worth drawing: the robot's goal, then each dynamic
    human's goal as of the last frame (static ring members stand on
    theirs, a star there is noise)."""
    if not record.frames:
        return []
    last = record.frames[-1]
    n_static = record.config.n_static() if record.config.env_kind == "group" else 0
    goals = [(last.robot.gx, last.robot.gy)]
    for h in last.humans[n_static:]:
        goals.append((h.gx, h.gy))
    return goals
