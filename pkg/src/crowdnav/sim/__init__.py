from .env import CrowdSim
from .kinematics import clip_speed, step_kinematics
from .observation import LastSeen, Observation, initial_observation, observe, visibility
from .reward import compute_reward, goal_distance, min_separation
from .scenario import generate_scenario
from .trajectory import TrajectoryRecord, read_csv, write_csv
from .types import (
    EpisodeTerminatedError,
    HumanState,
    RobotState,
    ScenarioGenerationError,
    StepOutcome,
    Terminal,
    WorldState,
)
