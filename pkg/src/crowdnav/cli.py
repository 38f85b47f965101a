"""Command-line entry point: train, eval, render, scenario.

Exit codes: 0 success, 1 configuration or usage error, 2 unexpected failure,
3 an evaluation threshold (--min-success) was not met.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys
import traceback

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, merge_dicts, parse_override, save_config
from .evaluation.harness import evaluate
from .evaluation.render import render_record, render_tracks, save_svg
from .evaluation.suites import make_suite, suite_names
from .policy.checkpoint import CheckpointError, load_checkpoint, validate_params
from .policy.controller import make_controller
from .rl.trainer import Trainer
from .sim.env import CrowdSim
from .sim.scenario import generate_scenario
from .sim.trajectory import read_csv

MANIFEST_NAME = "manifest.json"
EVAL_SAMPLING_STREAM = 6

CONTROLLERS = ("learned", "orca", "social_force", "straight")


class ThresholdError(RuntimeError):
    """An evaluation came in under a required threshold."""


# ---------------------------------------------------------------------------
# config assembly


def _collect_overrides(pairs: list[str] | None) -> dict:
    merged: dict = {}
    for pair in pairs or []:
        merged = merge_dicts(merged, parse_override(pair))
    return merged


def build_config(args) -> RunConfig:
    """Precedence: defaults < --config file < --suite < --set overrides."""
    cfg = load_config(getattr(args, "config", None), None)
    if getattr(args, "suite", None):
        cfg = dataclasses.replace(cfg, scenario=make_suite(args.suite, cfg.scenario))
    overrides = _collect_overrides(getattr(args, "set", None))
    if overrides:
        cfg = RunConfig.from_dict(merge_dicts(cfg.to_dict(), overrides))
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# run directories and manifests


def resolve_run_dir(path: str) -> str:
    """Relative run dirs live under $CROWDNAV_RUN_ROOT (default ./runs)."""
    if os.path.isabs(path):
        return path
    root = os.environ.get("CROWDNAV_RUN_ROOT", "runs")
    return os.path.join(root, path)


def manifest_path(run_dir: str) -> str:
    return os.path.join(run_dir, MANIFEST_NAME)


def checkpoint_indices(run_dir: str) -> list[int]:
    out = []
    if os.path.isdir(run_dir):
        for name in os.listdir(run_dir):
            m = re.fullmatch(r"checkpoint_(\d+)\.ckpt", name)
            if m:
                out.append(int(m.group(1)))
    return sorted(out)


def write_manifest(run_dir: str, cfg: RunConfig) -> None:
    data = {
        "format": 1,
        "run_id": os.path.basename(os.path.normpath(run_dir)),
        "config": cfg.to_dict(),
        "checkpoints": checkpoint_indices(run_dir),
    }
    with open(manifest_path(run_dir), "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(run_dir: str) -> dict:
    path = manifest_path(run_dir)
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"no manifest at {path}; not a run directory?") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed manifest {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args) -> int:
    run_dir = resolve_run_dir(args.run_dir)
    if args.resume:
        if args.config or args.set or args.suite:
            raise ConfigError("--resume takes its config from the manifest; "
                              "drop --config/--suite/--set")
        manifest = read_manifest(run_dir)
        cfg = RunConfig.from_dict(manifest["config"])
        trainer = Trainer.resume(cfg, run_dir)
        print(f"resumed {run_dir} at update {trainer.update_idx} "
              f"({trainer.env_steps} env steps)")
    else:
        if os.path.exists(manifest_path(run_dir)):
            raise ConfigError(
                f"{run_dir} already holds a run; pass --resume to continue it"
            )
        cfg = build_config(args)
        os.makedirs(run_dir, exist_ok=True)
        trainer = Trainer(cfg, run_dir)
        save_config(cfg, os.path.join(run_dir, "config.yaml"))
        trainer.save()  # checkpoint_0: the untrained baseline
        write_manifest(run_dir, cfg)

    def log(metrics):
        if args.quiet:
            return
        print(
            f"update {metrics.update_idx}/{trainer.n_updates()} "
            f"steps {metrics.env_steps} "
            f"reward {metrics.mean_reward:.3f} success {metrics.success_rate:.3f} "
            f"pi {metrics.policy_loss:.4f} v {metrics.value_loss:.4f} "
            f"clip {metrics.clip_frac:.3f}"
        )

    trainer.train(log=log)
    write_manifest(run_dir, trainer.cfg)
    print(f"done: {trainer.update_idx} updates, {trainer.env_steps} env steps, "
          f"checkpoints {checkpoint_indices(run_dir)[-1]} in {run_dir}")
    return 0


def _load_policy(path: str):
    params, network, extra = load_checkpoint(path)
    validate_params(params, network, where=path)
    return params, network, extra


def _make_eval_controller(args, cfg: RunConfig):
    if args.controller == "learned":
        if not args.checkpoint:
            raise ConfigError("--controller learned needs --checkpoint")
        params, network, _ = _load_policy(args.checkpoint)
        rng = np.random.default_rng([cfg.eval.seed_base, EVAL_SAMPLING_STREAM])
        return make_controller(
            "learned", cfg.scenario.dt, params=params, network=network,
            n_humans=cfg.scenario.n_humans,
            deterministic=cfg.eval.deterministic, rng=rng,
        )
    return make_controller(args.controller, cfg.scenario.dt,
                           orca_cfg=cfg.agents.orca, sf_cfg=cfg.agents.social_force)


def cmd_eval(args) -> int:
    cfg = build_config(args)
    if args.episodes is not None:
        cfg = dataclasses.replace(cfg, eval=dataclasses.replace(cfg.eval, n_episodes=args.episodes))
    if args.seed_base is not None:
        cfg = dataclasses.replace(cfg, eval=dataclasses.replace(cfg.eval, seed_base=args.seed_base))
    cfg.validate()
    controller = _make_eval_controller(args, cfg)
    report = evaluate(cfg.scenario, cfg.agents, controller,
                      cfg.eval.n_episodes, cfg.eval.seed_base)
    print(report.summary())
    if args.out:
        payload = {
            "controller": args.controller,
            "checkpoint": args.checkpoint,
            "scenario": dataclasses.asdict(cfg.scenario),
            "n_episodes": report.n_episodes,
            "n_success": report.n_success,
            "n_collision": report.n_collision,
            "n_timeout": report.n_timeout,
            "success_rate": report.success_rate,
            "collision_rate": report.collision_rate,
            "timeout_rate": report.timeout_rate,
            "mean_nav_time": report.mean_nav_time,
            "mean_return": report.mean_return,
            "episodes": [
                {
                    "seed": e.seed,
                    "terminal": e.terminal.value,
                    "steps": e.steps,
                    "return": e.episode_return,
                    "nav_time": e.nav_time,
                    "min_separation": e.min_separation,
                }
                for e in report.episodes
            ],
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.out}")
    if args.min_success is not None and report.success_rate < args.min_success:
        raise ThresholdError(
            f"success rate {report.success_rate:.3f} below required {args.min_success:.3f}"
        )
    return 0


def cmd_render(args) -> int:
    if args.csv:
        tracks = read_csv(args.csv)
        svg = render_tracks(tracks, fov_deg=args.fov, n_static=args.n_static)
    else:
        cfg = build_config(args)
        if args.controller == "learned" and not args.checkpoint:
            raise ConfigError("render needs --csv, or --checkpoint for the learned controller")
        controller = _make_eval_controller(args, cfg)
        env = CrowdSim(cfg.scenario, cfg.agents, record=True)
        from .evaluation.harness import run_episode

        result = run_episode(env, controller, args.seed, keep_record=True)
        print(f"seed {args.seed}: {result.terminal.value} after {result.steps} steps, "
              f"return {result.episode_return:.3f}")
        svg = render_record(result.record)
    save_svg(svg, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_scenario(args) -> int:
    cfg = build_config(args)
    world = generate_scenario(cfg.scenario, args.seed)
    payload = world.to_dict()
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_config_args(p: argparse.ArgumentParser, with_suite: bool = True) -> None:
    p.add_argument("--config", help="YAML config file")
    if with_suite:
        p.add_argument("--suite", choices=suite_names(),
                       help="named evaluation scenario preset")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="config override, e.g. --set ppo.lr=1e-4 (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdnav",
        description="Decentralized crowd navigation: simulator, recurrent "
                    "policy training, evaluation, rendering.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a policy with recurrent PPO")
    p.add_argument("--run-dir", required=True,
                   help="checkpoint/metrics directory (relative paths live "
                        "under $CROWDNAV_RUN_ROOT, default ./runs)")
    p.add_argument("--resume", action="store_true", help="continue an existing run")
    p.add_argument("--quiet", action="store_true", help="suppress per-update lines")
    _add_config_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a controller over seeded episodes")
    p.add_argument("--checkpoint", help="policy checkpoint (.ckpt) for --controller learned")
    p.add_argument("--controller", choices=CONTROLLERS, default="learned")
    p.add_argument("--episodes", type=int, help="override eval.n_episodes")
    p.add_argument("--seed-base", type=int, help="override eval.seed_base")
    p.add_argument("--min-success", type=float,
                   help="exit with status 3 if success rate falls below this")
    p.add_argument("--out", help="write a JSON report here")
    _add_config_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="render an episode (or a trajectory CSV) to SVG")
    p.add_argument("--out", required=True, help="output .svg path")
    p.add_argument("--csv", help="render a recorded trajectory CSV instead of simulating")
    p.add_argument("--fov", type=float, default=360.0,
                   help="field-of-view wedge for --csv rendering (degrees)")
    p.add_argument("--n-static", type=int, default=0,
                   help="leading human tracks drawn as static for --csv rendering")
    p.add_argument("--checkpoint", help="policy checkpoint for --controller learned")
    p.add_argument("--controller", choices=CONTROLLERS, default="learned")
    p.add_argument("--seed", type=int, default=0, help="episode seed to simulate")
    _add_config_args(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("scenario", help="generate a seeded scenario and dump it as JSON")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="output path (default: stdout)")
    _add_config_args(p)
    p.set_defaults(func=cmd_scenario)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ThresholdError as exc:
        print(f"threshold not met: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, CheckpointError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # pragma: no cover - last-resort diagnostics
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
