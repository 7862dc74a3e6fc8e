"""
Command-line entry point for optosense.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from .analysis.pipeline import COMMANDS, ScenarioPipeline
from .config import default_config_path, load_scenario
from .errors import ConfigurationError, DomainError, OptosenseError, format_validation_error
from .spectra.spectrum import FrequencyGrid

logger = logging.getLogger("optosense")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

COMMAND_HELP = {
    "budget": "Displacement-noise budget (thermal, shot, frequency, gas, backgrounds)",
    "cool": "Cold-damping gain sweep with effective temperatures",
    "scan": "Thermal level along a lateral scan of the optical spot",
    "fit": "Synthesize a record, estimate its PSD and fit the resonance",
    "synth": "Synthesize a detector record from the full noise model",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optosense",
        description="Optomechanical displacement sensing simulator.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Noise budget of the shipped reference scenario
  optosense budget --out runs/budget

  # Cooling sweep with a custom scenario
  optosense cool --config my.cfg --out runs/cool

  # Round-trip estimation with another seed on a coarser grid
  optosense fit --out runs/fit --seed 7 --grid 1e4,4e6,2000,log
        """,
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")
    for command in COMMANDS:
        sub = subparsers.add_parser(command, help=COMMAND_HELP[command])
        sub.add_argument(
            "--config",
            type=Path,
            default=None,
            help="Scenario file (default: the shipped paper.cfg)",
        )
        sub.add_argument("--out", type=Path, required=True, help="Output directory")
        sub.add_argument("--seed", type=int, default=None, help="Override [run] seed")
        sub.add_argument(
            "--grid",
            default=None,
            help="Override [grid] as f_min,f_max,n,log|lin",
        )
        verbosity = sub.add_mutually_exclusive_group()
        verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
        verbosity.add_argument("-q", "--quiet", action="store_true", help="Errors only")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)
    logging.captureWarnings(True)


def _parse_grid(text: str) -> FrequencyGrid:
    try:
        return FrequencyGrid.parse(text)
    except DomainError as exc:
        raise ConfigurationError(f"--grid: {exc}", section="grid") from exc


def _fail(exc: Exception, code: int) -> int:
    message = str(exc).replace("\n", " ")
    print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command.

    Returns:
        0 on success, 2 for scenario/configuration errors, 1 for other failures
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        scenario = load_scenario(args.config or default_config_path())
        grid = _parse_grid(args.grid) if args.grid else None
        scenario = scenario.with_overrides(seed=args.seed, grid=grid)
        manifest = ScenarioPipeline(scenario).run(args.command, args.out)
    except ConfigurationError as exc:
        return _fail(exc, 2)
    except ValidationError as exc:
        return _fail(ConfigurationError(format_validation_error(exc)), 2)
    except FileNotFoundError as exc:
        return _fail(exc, 2)
    except (OptosenseError, OSError, MemoryError) as exc:
        return _fail(exc, 1)

    logger.info("%s: %d files in %s", args.command, len(manifest.entries), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
