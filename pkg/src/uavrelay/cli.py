"""Command-line front end: ``uavrelay {rate-map,train,compare} [options]``.

Each subcommand loads a configuration (a named profile or a JSON file),
applies optional dotted-path overrides, and writes CSV/JSON artifacts plus a
manifest into the output directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import (
    ExperimentConfig,
    profile_by_name,
    set_master_seed,
    apply_overrides,
    run_rate_map,
    run_train,
    run_compare,
    METHODS,
)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument(
        "--profile",
        choices=("desk", "paper"),
        default="desk",
        help="built-in configuration profile (ignored when --config is given)",
    )
    parser.add_argument(
        "--scenario",
        choices=("static_narrow", "static_wide", "dynamic_sequence"),
        default=None,
        help="user-distribution kind; profiles recalibrate transmit power per kind",
    )
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="PATH=VALUE",
        help="override a config field by dotted path, e.g. --set ddpg.episodes=200",
    )


def _load_config(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = ExperimentConfig.from_json(args.config.read_text())
    else:
        cfg = profile_by_name(
            args.profile,
            seed=args.seed if args.seed is not None else 0,
            scenario=args.scenario,
        )
    if args.seed is not None:
        set_master_seed(cfg, args.seed)
    if args.overrides:
        assignments = {}
        for item in args.overrides:
            if "=" not in item:
                raise SystemExit(f"--set expects PATH=VALUE, got {item!r}")
            path, value = item.split("=", 1)
            assignments[path] = value
        cfg = apply_overrides(cfg, assignments)
    if args.out is not None:
        cfg.output_dir = str(args.out)
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="uavrelay",
        description="Dual-hop relay placement experiments: rate maps, policy "
        "training, and method comparisons.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_map = sub.add_parser("rate-map", help="downlink rate on a position lattice")
    _add_common(p_map)
    p_map.add_argument("--resolution", type=float, default=None, help="lattice step, meters")

    p_train = sub.add_parser("train", help="train the placement policy")
    _add_common(p_train)

    p_cmp = sub.add_parser("compare", help="score placement methods")
    _add_common(p_cmp)
    p_cmp.add_argument(
        "--methods",
        default="ddpg,pso,grid,fd",
        help=f"comma-separated subset of {','.join(METHODS)}",
    )
    p_cmp.add_argument(
        "--train-dir",
        type=Path,
        default=None,
        help="directory holding train outputs (defaults to the output directory)",
    )

    args = parser.parse_args(argv)
    cfg = _load_config(args)

    if args.command == "rate-map":
        result = run_rate_map(cfg, resolution=args.resolution)
        print(f"wrote {result['num_points']} lattice points to {result['csv']}")
        bx, by = result["best_position"]
        print(f"best position ({bx:.1f}, {by:.1f}) with rate {result['best_r2']:.3f} bps/Hz")
    elif args.command == "train":
        artifacts = run_train(cfg)
        for seg in artifacts.segments:
            flag = " (early stop)" if seg.stopped_early else ""
            print(
                f"{seg.segment}: {seg.episodes_run} episodes{flag}, "
                f"best ({seg.best_xy[0]:.1f}, {seg.best_xy[1]:.1f}) "
                f"rate {seg.best_r2:.3f} bps/Hz, {seg.wall_time_s:.1f} s"
            )
        print(f"episode traces: {artifacts.episodes_csv}")
    elif args.command == "compare":
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        result = run_compare(cfg, methods=methods, train_dir=args.train_dir)
        for row in result["rows"]:
            print(f"{row[0]:>5s} {row[1]:>14s}: ({row[2]}, {row[3]}) rate {float(row[4]):.3f}")
        print(f"comparison table: {result['csv']}")
        if result["runtime_csv"]:
            print(f"cumulative runtimes: {result['runtime_csv']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
