from .harness import EpisodeResult, EvalReport, evaluate, run_episode
from .render import render_record, render_tracks, save_svg
from .suites import SUITES, make_suite, suite_names

__all__ = [
    "EpisodeResult",
    "EvalReport",
    "SUITES",
    "evaluate",
    "make_suite",
    "render_record",
    "render_tracks",
    "run_episode",
    "save_svg",
    "suite_names",
]
