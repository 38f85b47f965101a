"""Batch evaluation: roll a controller through seeded episodes and count
outcomes exactly."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..config import AgentConfig, ScenarioConfig
from ..policy.controller import Controller
from ..sim.env import CrowdSim
from ..sim.trajectory import TrajectoryRecord
from ..sim.types import Terminal


@dataclass
class EpisodeResult:
    seed: int
    terminal: Terminal
    steps: int
    episode_return: float  # undiscounted reward sum
    nav_time: float  # steps * dt (meaningful for successes)
    min_separation: float  # closest robot-human surface distance seen
    record: TrajectoryRecord | None = None


@dataclass
class EvalReport:
    n_episodes: int
    n_success: int
    n_collision: int
    n_timeout: int
    mean_nav_time: float  # over successful episodes; nan if none
    mean_return: float
    episodes: list[EpisodeResult] = field(repr=False, default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.n_success / self.n_episodes

    @property
    def collision_rate(self) -> float:
        return self.n_collision / self.n_episodes

    @property
    def timeout_rate(self) -> float:
        return self.n_timeout / self.n_episodes

    def summary(self) -> str:
        nav = "nan" if self.mean_nav_time != self.mean_nav_time else f"{self.mean_nav_time:.2f}s"
        return (
            f"episodes={self.n_episodes} success={self.n_success} "
            f"collision={self.n_collision} timeout={self.n_timeout} "
            f"success_rate={self.success_rate:.3f} mean_nav_time={nav} "
            f"mean_return={self.mean_return:.3f}"
        )


def run_episode(
    env: CrowdSim, controller: Controller, seed: int, keep_record: bool = False
) -> EpisodeResult:
    obs = env.reset(seed=seed)
    controller.reset()
    total = 0.0
    min_sep = float("inf")
    outcome = None
    while not env.terminal:
        action = controller.act(obs)
        obs, outcome, world = env.step(action)
        total += outcome.reward
        min_sep = min(min_sep, outcome.d_min)
    assert outcome is not None and outcome.terminal is not None
    steps = env.world.t
    return EpisodeResult(
        seed=seed,
        terminal=outcome.terminal,
        steps=steps,
        episode_return=total,
        nav_time=steps * env.scenario.dt,
        min_separation=min_sep,
        record=env.trajectory() if keep_record else None,
    )


def evaluate(
    scenario: ScenarioConfig,
    agents: AgentConfig,
    controller: Controller,
    n_episodes: int,
    seed_base: int,
    keep_records: bool = False,
) -> EvalReport:
    """Run n_episodes with seeds seed_base..seed_base+n-1 and tally outcomes.

    Evaluation seeds should stay below 2**32; training episodes draw from
    [2**32, 2**63) so the two never share a scenario.
    """
    env = CrowdSim(scenario, agents, record=keep_records)
    episodes = [
        run_episode(env, controller, seed_base + i, keep_record=keep_records)
        for i in range(n_episodes)
    ]
    n_success = sum(1 for e in episodes if e.terminal is Terminal.REACH_GOAL)
    n_collision = sum(1 for e in episodes if e.terminal is Terminal.COLLISION)
    n_timeout = sum(1 for e in episodes if e.terminal is Terminal.TIMEOUT)
    assert n_success + n_collision + n_timeout == n_episodes
    nav_times = [e.nav_time for e in episodes if e.terminal is Terminal.REACH_GOAL]
    mean_nav = sum(nav_times) / len(nav_times) if nav_times else float("nan")
    mean_return = (
        sum(e.episode_return for e in episodes) / n_episodes if n_episodes else float("nan")
    )
    return EvalReport(
        n_episodes=n_episodes,
        n_success=n_success,
        n_collision=n_collision,
        n_timeout=n_timeout,
        mean_nav_time=mean_nav,
        mean_return=mean_return,
        episodes=episodes,
    )
