"""Named evaluation scenarios: field-of-view sweeps and static-group
layouts at increasing crowd sizes."""

from __future__ import annotations

import dataclasses

from ..config import ScenarioConfig

# name -> overrides applied to a base scenario config
SUITES: dict[str, dict] = {
    "fov_90": {"env_kind": "fov", "fov_deg": 90.0, "n_humans": 5, "n_static_groups": 0},
    "fov_180": {"env_kind": "fov", "fov_deg": 180.0, "n_humans": 5, "n_static_groups": 0},
    "fov_360": {"env_kind": "fov", "fov_deg": 360.0, "n_humans": 5, "n_static_groups": 0},
    "group_10": {"env_kind": "group", "fov_deg": 360.0, "n_humans": 10, "n_static_groups": 2},
    "group_15": {"env_kind": "group", "fov_deg": 360.0, "n_humans": 15, "n_static_groups": 3},
    "group_20": {"env_kind": "group", "fov_deg": 360.0, "n_humans": 20, "n_static_groups": 3},
}


def suite_names() -> list[str]:
    return list(SUITES)


def make_suite(name: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """A scenario config for a named suite, derived from base (or defaults)."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r} (choose from {suite_names()})")
    cfg = dataclasses.replace(base) if base is not None else ScenarioConfig()
    cfg = dataclasses.replace(cfg, **SUITES[name])
    cfg.validate()
    return cfg
