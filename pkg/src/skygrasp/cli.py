"""Command-line interface: run suites, replay traces, render figures, validate files.

Exit codes: 0 success, 1 episode/replay errors, 2 config or scene errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import CellSpec, config_from_dict, load_config
from .errors import ConfigError, SceneError, SkygraspError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skygrasp",
        description="Language-guided aerial grasping simulation benchmark",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-episode progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the benchmark suite from a config file")
    run.add_argument("config", help="path to the suite config JSON")
    run.add_argument("--seed", type=int, default=None, help="override suite.base_seed")
    run.add_argument(
        "--scenario",
        default=None,
        help="run a single cell: KIND[:CLUTTER], e.g. tabletop:dense",
    )
    run.add_argument("--ablation", default=None, help="ablation for the single cell")
    run.add_argument("--out-dir", default=None, help="output directory override")

    replay = sub.add_parser("replay", help="re-run a recorded trace and verify determinism")
    replay.add_argument("trace", help="path to a trace .jsonl file")

    plot = sub.add_parser("plot", help="render figures from a suite output directory")
    plot.add_argument("results", help="suite output directory (with results.csv and traces/)")
    plot.add_argument("--out-dir", default=None, help="figure directory (default: <results>/figures)")

    validate = sub.add_parser("validate", help="validate a scene or config JSON file")
    validate.add_argument("path", help="file to validate")
    return parser


def _cmd_run(args) -> int:
    from dataclasses import replace

    from .harness import run_suite
    from .metrics import format_report

    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, suite=replace(config.suite, base_seed=args.seed))
    if args.scenario is not None or args.ablation is not None:
        scenario = args.scenario or "tabletop"
        kind, _, clutter = scenario.partition(":")
        cell = CellSpec(kind, clutter or "sparse", args.ablation or "none")
        config = replace(config, suite=replace(config.suite, cells=(cell,)))

    try:
        reports = run_suite(config, out_dir=args.out_dir)
    except SkygraspError as exc:
        print(f"episode error: {exc}", file=sys.stderr)
        return 1
    for name in sorted(reports):
        print(format_report(name, reports[name]))
    return 0


def _cmd_replay(args) -> int:
    from .harness import replay_trace

    matched, message = replay_trace(args.trace)
    print(("MATCH: " if matched else "MISMATCH: ") + message)
    return 0 if matched else 1


def _cmd_plot(args) -> int:
    from .plotting import plot_results

    written = plot_results(args.results, args.out_dir)
    for path in written:
        print(path)
    return 0


def _cmd_validate(args) -> int:
    from .scene import scene_from_dict

    path = Path(args.path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2
    try:
        if isinstance(data, dict) and "objects" in data:
            scene_from_dict(data)
            print(f"{path}: valid scene")
        else:
            config_from_dict(data)
            print(f"{path}: valid config")
    except (SceneError, ConfigError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "replay":
            return _cmd_replay(args)
        if args.command == "plot":
            return _cmd_plot(args)
        if args.command == "validate":
            return _cmd_validate(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SceneError as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
