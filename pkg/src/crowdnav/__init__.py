"""Crowd navigation sandbox: simulator, scripted agents, recurrent policies, PPO."""

__version__ = "0.1.0"
