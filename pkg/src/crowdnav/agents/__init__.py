from .orca import Body, Line, orca_lines, orca_velocity, pref_velocity_to_goal
from .social_force import social_force_velocity
