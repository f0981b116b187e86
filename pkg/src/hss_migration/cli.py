import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from .config import load_scenario, parse_experiment
from .exceptions import ConfigError, SimulationError
from .metrics import PLOT_KINDS, emit_plot_data
from .runner import ExperimentRunner

logger = logging.getLogger(__name__)

OUTPUT_ENV = "HSS_MIGRATION_OUT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hss-migration",
        description="Simulate file migration policies on a hierarchical storage system",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity (default: INFO)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run policies over a scenario")
    run.add_argument("config", help="Scenario YAML file or preset name")
    run.add_argument("--policies", help="Comma-separated policy names (default: the scenario's list)")
    run.add_argument("--reps", type=int, default=1, help="Repetitions per policy; seed + k for rep k")
    run.add_argument("--seed", type=int, default=None, help="Base seed (default: the scenario's)")
    run.add_argument("--out", type=Path, default=None, help=f"Output directory (or ${OUTPUT_ENV})")
    run.add_argument("--workers", type=int, default=1, help="Parallel worker processes")

    plot = commands.add_parser("emit-plot", help="Write plot-ready CSV from a run directory")
    plot.add_argument("run_dir", type=Path)
    plot.add_argument("--kind", required=True, choices=PLOT_KINDS)
    plot.add_argument("--timesteps", type=_int_list, default=None, help="Heatmap timesteps, e.g. 1,1000")
    return parser


def _output_dir(args: argparse.Namespace, configured: Optional[Path], scenario: str) -> Path:
    if args.out is not None:
        return args.out
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    if configured is not None:
        return configured
    return Path("runs") / scenario


def _run(args: argparse.Namespace) -> int:
    config = load_scenario(args.config)
    policies = (
        [name.strip() for name in args.policies.split(",") if name.strip()]
        if args.policies
        else config.policies
    )
    spec = parse_experiment(
        {
            "scenario": str(args.config),
            "policies": policies,
            "repetitions": args.reps,
            "seed": args.seed,
            "output_dir": _output_dir(args, config.output.directory, config.name),
            "workers": args.workers,
        }
    )
    path = ExperimentRunner(spec, config).run()
    print(path)
    return EXIT_OK


def _emit_plot(args: argparse.Namespace) -> int:
    path = emit_plot_data(args.run_dir, args.kind, args.timesteps)
    print(path)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    try:
        if args.command == "run":
            return _run(args)
        return _emit_plot(args)
    except ConfigError as exc:
        logger.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    except (SimulationError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
