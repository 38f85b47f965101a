"""Configuration dataclasses, YAML loading, and override handling.

All knobs for the simulator, the scripted agents, the policy network,
the PPO trainer, and the evaluation harness live here as one composite
``RunConfig``.  Precedence when assembling a config is:

    built-in defaults  <  config file (YAML)  <  command-line overrides
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import yaml


class ConfigError(ValueError):
    """A config file, value, or override is malformed."""


@dataclass
class ScenarioConfig:
    """Static description of an episode distribution."""

    env_kind: str = "fov"  # "fov" or "group"
    fov_deg: float = 360.0  # robot field of view in degrees, (0, 360]
    n_humans: int = 5
    n_static_groups: int = 0  # group env only
    group_size: int = 3  # humans per static ring
    group_ring_radius: float = 1.0  # m, radius of each static ring
    circle_radius: float = 6.0  # m, crossing-circle radius
    dt: float = 0.25  # s, control interval
    horizon: int = 100  # steps; episode times out when t reaches this
    gamma: float = 0.99  # discount, also used by reward shaping consumers
    rng_seed: int = 0  # default scenario seed when none is supplied
    human_radius_min: float = 0.3
    human_radius_max: float = 0.5
    human_v_max_min: float = 0.5
    human_v_max_max: float = 1.5
    robot_radius: float = 0.3
    robot_v_max: float = 1.0
    goal_tolerance: float = 0.3  # rho: reach-goal distance
    goal_resample_prob: float = 0.01  # per-human per-step chance of a new goal
    spawn_margin: float = 0.2  # m of clearance required between spawns
    humans_see_robot: bool = False  # False = "invisible robot" setting

    def n_static(self) -> int:
        return self.n_static_groups * self.group_size

    def validate(self, path: str = "scenario") -> None:
        if self.env_kind not in ("fov", "group"):
            raise ConfigError(f"{path}.env_kind must be 'fov' or 'group', got {self.env_kind!r}")
        if not 0.0 < self.fov_deg <= 360.0:
            raise ConfigError(f"{path}.fov_deg must be in (0, 360], got {self.fov_deg}")
        if self.n_humans < 0:
            raise ConfigError(f"{path}.n_humans must be >= 0, got {self.n_humans}")
        if self.n_static_groups < 0 or self.group_size < 1:
            raise ConfigError(f"{path}: n_static_groups must be >= 0 and group_size >= 1")
        if self.env_kind == "group" and self.n_static() > self.n_humans:
            raise ConfigError(
                f"{path}: {self.n_static_groups} static groups of {self.group_size} "
                f"need more humans than n_humans={self.n_humans}"
            )
        if self.env_kind == "fov" and self.n_static_groups != 0:
            raise ConfigError(f"{path}.n_static_groups must be 0 for the fov env")
        if self.dt <= 0.0:
            raise ConfigError(f"{path}.dt must be > 0, got {self.dt}")
        if self.horizon < 1:
            raise ConfigError(f"{path}.horizon must be >= 1, got {self.horizon}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"{path}.gamma must be in (0, 1], got {self.gamma}")
        if self.circle_radius <= 0.0:
            raise ConfigError(f"{path}.circle_radius must be > 0")
        if not 0.0 < self.human_radius_min <= self.human_radius_max:
            raise ConfigError(f"{path}: human radius range is invalid")
        if not 0.0 < self.human_v_max_min <= self.human_v_max_max:
            raise ConfigError(f"{path}: human v_max range is invalid")
        if self.robot_radius <= 0.0 or self.robot_v_max <= 0.0:
            raise ConfigError(f"{path}: robot radius and v_max must be > 0")
        if self.goal_tolerance <= 0.0:
            raise ConfigError(f"{path}.goal_tolerance must be > 0")
        if not 0.0 <= self.goal_resample_prob <= 1.0:
            raise ConfigError(f"{path}.goal_resample_prob must be in [0, 1]")
        if self.spawn_margin < 0.0:
            raise ConfigError(f"{path}.spawn_margin must be >= 0")


@dataclass
class OrcaConfig:
    """Parameters of the reciprocal-collision-avoidance controller."""

    time_horizon: float = 5.0  # s, tau in the half-plane construction
    neighbor_dist: float = 10.0  # m, neighbors beyond this are ignored
    max_neighbors: int = 10
    safety_buffer: float = 0.01  # m added to combined radii

    def validate(self, path: str = "agents.orca") -> None:
        if self.time_horizon <= 0.0 or self.neighbor_dist <= 0.0:
            raise ConfigError(f"{path}: time_horizon and neighbor_dist must be > 0")
        if self.max_neighbors < 0:
            raise ConfigError(f"{path}.max_neighbors must be >= 0")
        if self.safety_buffer < 0.0:
            raise ConfigError(f"{path}.safety_buffer must be >= 0")


@dataclass
class SocialForceConfig:
    """Parameters of the social-force controller."""

    relaxation_time: float = 0.5  # s
    repulsion_strength: float = 2.0  # A, m/s^2
    repulsion_range: float = 0.3  # B, m

    def validate(self, path: str = "agents.social_force") -> None:
        if self.relaxation_time <= 0.0:
            raise ConfigError(f"{path}.relaxation_time must be > 0")
        if self.repulsion_strength < 0.0 or self.repulsion_range <= 0.0:
            raise ConfigError(f"{path}: repulsion parameters are invalid")


@dataclass
class AgentConfig:
    """Which scripted controller drives the humans, plus its parameters."""

    human_policy: str = "orca"  # "orca" or "social_force"
    orca: OrcaConfig = field(default_factory=OrcaConfig)
    social_force: SocialForceConfig = field(default_factory=SocialForceConfig)

    def validate(self, path: str = "agents") -> None:
        if self.human_policy not in ("orca", "social_force"):
            raise ConfigError(
                f"{path}.human_policy must be 'orca' or 'social_force', got {self.human_policy!r}"
            )
        self.orca.validate(f"{path}.orca")
        self.social_force.validate(f"{path}.social_force")


@dataclass
class NetworkConfig:
    """Policy-network architecture knobs."""

    arch: str = "st_graph"  # "st_graph" or "rnn_attn"
    d_rnn: int = 128  # hidden size of every recurrent cell
    d_embed: int = 64  # width of the input embeddings
    d_k: int = 64  # attention key/query width

    def validate(self, path: str = "network") -> None:
        if self.arch not in ("st_graph", "rnn_attn"):
            raise ConfigError(f"{path}.arch must be 'st_graph' or 'rnn_attn', got {self.arch!r}")
        for name in ("d_rnn", "d_embed", "d_k"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{path}.{name} must be >= 1")


@dataclass
class PpoConfig:
    """Trainer hyperparameters. Defaults are the full-scale settings."""

    total_steps: int = 10_000_000  # environment frames to collect
    num_envs: int = 12
    num_steps: int = 30  # segment length per env per update
    lr: float = 4e-5
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    epochs: int = 5
    num_minibatches: int = 2  # env-subset minibatches per epoch
    value_coef: float = 0.5
    entropy_coef: float = 0.0
    max_grad_norm: float = 0.5
    seed: int = 0
    checkpoint_interval: int = 200  # updates between checkpoints

    def validate(self, path: str = "ppo") -> None:
        if self.total_steps < 1 or self.num_envs < 1 or self.num_steps < 1:
            raise ConfigError(f"{path}: total_steps, num_envs, num_steps must be >= 1")
        if self.num_envs % self.num_minibatches != 0:
            raise ConfigError(
                f"{path}.num_minibatches={self.num_minibatches} must divide "
                f"num_envs={self.num_envs}"
            )
        if self.lr <= 0.0:
            raise ConfigError(f"{path}.lr must be > 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"{path}.gamma must be in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ConfigError(f"{path}.gae_lambda must be in [0, 1]")
        if self.clip_eps <= 0.0:
            raise ConfigError(f"{path}.clip_eps must be > 0")
        if self.epochs < 1:
            raise ConfigError(f"{path}.epochs must be >= 1")
        if self.value_coef < 0.0 or self.entropy_coef < 0.0:
            raise ConfigError(f"{path}: value_coef and entropy_coef must be >= 0")
        if self.max_grad_norm <= 0.0:
            raise ConfigError(f"{path}.max_grad_norm must be > 0")
        if self.checkpoint_interval < 1:
            raise ConfigError(f"{path}.checkpoint_interval must be >= 1")


@dataclass
class EvalConfig:
    """Evaluation-harness settings."""

    n_episodes: int = 500
    seed_base: int = 10_000  # episode i uses scenario seed seed_base + i
    deterministic: bool = True  # learned policies act with the mean

    def validate(self, path: str = "eval") -> None:
        if self.n_episodes < 1:
            raise ConfigError(f"{path}.n_episodes must be >= 1")
        if self.seed_base < 0 or self.seed_base >= 2**32:
            raise ConfigError(f"{path}.seed_base must be in [0, 2^32)")


@dataclass
class RunConfig:
    """Composite config for a training or evaluation run."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    agents: AgentConfig = field(default_factory=AgentConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    ppo: PpoConfig = field(default_factory=PpoConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def validate(self) -> None:
        self.scenario.validate()
        self.agents.validate()
        self.network.validate()
        self.ppo.validate()
        self.eval.validate()

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        cfg = cls()
        _apply_dict(cfg, data, path="")
        cfg.validate()
        return cfg


def _apply_dict(obj: Any, data: dict[str, Any], path: str) -> None:
    """Recursively copy ``data`` onto a dataclass, checking keys and types."""
    if not isinstance(data, dict):
        raise ConfigError(f"config section {path or '<root>'} must be a mapping, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(obj)}
    for key, value in data.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in known:
            raise ConfigError(f"unknown config key: {where}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            _apply_dict(current, value, where)
        else:
            setattr(obj, key, _coerce(value, type(current), where))


def _coerce(value: Any, target: type, where: str) -> Any:
    """Check a scalar override against the default's type, allowing int -> float."""
    if target is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if target is int and isinstance(value, float) and value == int(value):
        return int(value)
    if target is bool and not isinstance(value, bool):
        raise ConfigError(f"{where} must be a boolean, got {value!r}")
    if not isinstance(value, target) or (target is int and isinstance(value, bool)):
        raise ConfigError(f"{where} must be {target.__name__}, got {value!r} ({type(value).__name__})")
    return value


def load_config(path: str | None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Build a RunConfig from an optional YAML file plus nested overrides."""
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                loaded = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must contain a mapping at top level")
        data = loaded
    if overrides:
        data = merge_dicts(data, overrides)
    return RunConfig.from_dict(data)


def merge_dicts(base: dict[str, Any], extra: dict[str, Any]) -> dict[str, Any]:
    """Deep-merge ``extra`` onto ``base`` without mutating either."""
    out = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge_dicts(out[key], value)
        else:
            out[key] = value
    return out


def parse_override(text: str) -> dict[str, Any]:
    """Parse a ``section.key=value`` override into a nested dict.

    Values go through the YAML scalar parser, so ``lr=4e-5``, ``deterministic=true``
    and ``env_kind=fov`` all get sensible types.
    """
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    key, _, raw = text.partition("=")
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override value {raw!r} is not a valid scalar: {exc}") from exc
    if isinstance(value, str):
        # YAML 1.1 leaves dotless scientific notation ("4e-5") as a string
        try:
            value = float(value)
        except ValueError:
            pass
    out: dict[str, Any] = {}
    node = out
    parts = key.split(".")
    for part in parts[:-1]:
        node[part] = {}
        node = node[part]
    node[parts[-1]] = value
    return out


def save_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=False)
