"""Command line interface: ``hk run | validate | presets``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
Configs are file paths or ``preset:<name>`` references.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, from_file, load_preset, preset_names

__all__ = ["main"]


def _resolve_config(ref: str):
    if ref.startswith("preset:"):
        return load_preset(ref[len("preset:"):])
    return from_file(ref)


def _apply_overrides(cfg, args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if args.no_plots:
        overrides["plots"] = False
    if overrides:
        cfg = cfg.with_overrides(**overrides)
        cfg.validate()
    return cfg


def _cmd_run(args) -> int:
    cfg = _apply_overrides(_resolve_config(args.config), args)
    from .experiments import run_experiment

    result = run_experiment(cfg)
    print(f"run complete: {result.output_dir} ({result.wall_time:.1f} s)")
    for name in result.artifacts:
        print(f"  {name}")
    return 0


def _cmd_validate(args) -> int:
    cfg = _resolve_config(args.config)
    print(f"ok: {cfg.experiment}")
    return 0


def _cmd_presets(args) -> int:
    if args.action == "list":
        for name in preset_names():
            cfg = load_preset(name)
            print(f"{name:32s} {cfg.experiment}")
        return 0
    raise AssertionError(f"unknown presets action {args.action}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hk",
        description="Semiclassical wave-packet propagation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment config or preset")
    run.add_argument("config", help="config file path or preset:<name>")
    run.add_argument("--seed", type=int, default=None, help="override the sampling seed")
    run.add_argument("--workers", type=int, default=None, help="override the worker count")
    run.add_argument("--output-dir", default=None, help="override the output directory")
    run.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config", help="config file path or preset:<name>")
    val.set_defaults(func=_cmd_validate)

    pre = sub.add_parser("presets", help="preset management")
    pre.add_argument("action", choices=["list"], help="what to do")
    pre.set_defaults(func=_cmd_presets)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
