"""Command-line entry point: ``run``, ``validate``, ``compare`` and ``demo``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import runner
from .config import ConfigError, ExperimentConfig, LearningConfig, ScenarioConfig, load_config, validate
from .agent import LearnParams
from .metrics import fmt, format_summary, write_table
from .radio import UavPosition

COMPARE_ORDER = ("es", "dqlsi", "is", "cql")
COMPARE_HEADER = ["config", "strategy", "connected_fraction", "total_energy_j", "covered_km2"]


def demo_config(out: str = "demo_output") -> ExperimentConfig:
    scenario = ScenarioConfig(width=600.0, height=600.0, n_static=60, n_mobile=20,
                              distribution="clustered", centers=((150.0, 170.0), (440.0, 420.0)))
    learning = LearningConfig(params=LearnParams(max_step=40))
    starts = (UavPosition(80.0, 80.0, 100.0), UavPosition(520.0, 520.0, 100.0))
    return ExperimentConfig(scenario=scenario, learning=learning, n_uavs=2, n_episodes=30,
                            n_runs=2, output_dir=out, initial_positions=starts)


def _run(cfg: ExperimentConfig, out: Path | None = None) -> int:
    result = runner.run_experiment(cfg)
    out = out or runner.output_dir(cfg)
    episodes, summary = runner.write_outputs(result, out)
    print(format_summary(result.summary))
    print(f"wrote {episodes} and {summary}")
    return 0


def cmd_run(args) -> int:
    return _run(load_config(args.config))


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    problems = validate(cfg)
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 1
    print(f"{args.config}: ok")
    return 0


def cmd_compare(args) -> int:
    folder = Path(args.config_dir)
    paths = sorted(folder.glob("*.ini"))
    if not paths:
        raise ConfigError(f"no .ini files in {folder}")
    strategies = args.strategies.split(",") if args.strategies else list(COMPARE_ORDER)
    rows = []
    for path in paths:
        cfg = load_config(path)
        for strategy in strategies:
            s = runner.run_experiment(cfg, strategy).summary
            rows.append([path.stem, strategy, fmt(s["connected_fraction"]["mean"]),
                         fmt(s["total_energy_j"]["mean"]), fmt(s["covered_km2"]["mean"])])
    widths = [max(len(r[k]) for r in rows + [COMPARE_HEADER]) + 2 for k in range(len(COMPARE_HEADER))]
    for r in [COMPARE_HEADER] + rows:
        print("".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    if args.output:
        write_table(Path(args.output), COMPARE_HEADER, rows)
    return 0


def cmd_demo(args) -> int:
    return _run(demo_config(), Path(args.output) if args.output else None)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavbs", description="UAV base-station placement experiments")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment and write episode and summary CSVs")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a config file without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("compare", help="run every strategy on each config in a directory")
    c.add_argument("config_dir")
    c.add_argument("--strategies", help="comma-separated subset of es,dqlsi,is,cql")
    c.add_argument("-o", "--output", help="also write the table as CSV")
    c.set_defaults(func=cmd_compare)

    d = sub.add_parser("demo", help="tiny built-in scenario")
    d.add_argument("-o", "--output", help="output directory")
    d.set_defaults(func=cmd_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError, runner.RunError) as exc:
        print(f"uavbs: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
