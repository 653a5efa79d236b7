"""bplab command line: run a scenario, list scenarios, validate a config.

Exit status is 0 only when every verdict of the run passed.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from bplab.config import ConfigError, load_config
from bplab.scenarios import list_scenarios, run_scenario, validate_config

logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
logger = logging.getLogger(__name__)


def _seed(value: str) -> int:
    seed = int(value)
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer: {value}")
    return seed


def _jobs(value: str) -> int:
    jobs = int(value)
    if jobs < 1:
        raise argparse.ArgumentTypeError(f"jobs must be >= 1: {value}")
    return jobs


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="bplab",
        description="Dispersive shallow-water numerical lab",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run the dispersion preset
  bplab run --config catalog/dispersion.yaml

  # Four workers, explicit output root
  bplab run --config catalog/consistency.yaml --jobs 4 --out /tmp/bplab

  # Check a config without running it
  bplab validate --config catalog/longtime.yaml
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="Run a scenario")
    run_parser.add_argument("--config", required=True, help="YAML experiment config")
    run_parser.add_argument("--out", default=None, help="Output root (default: $BPLAB_OUTPUT_DIR or ./bplab_out)")
    run_parser.add_argument("--jobs", type=_jobs, default=1, help="Worker processes for the sweep")
    run_parser.add_argument("--seed", type=_seed, default=None, help="Seed overriding the config value")
    run_parser.add_argument("--verbose", action="store_true", help="Enable debug logging")

    sub.add_parser("list-scenarios", help="List the known scenarios")

    validate_parser = sub.add_parser("validate", help="Validate a config file")
    validate_parser.add_argument("--config", required=True, help="YAML experiment config")
    validate_parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    return parser.parse_args(argv)


def _run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as e:
        logger.error(f"Invalid config: {e}")
        return 1

    result = run_scenario(config, out_dir=args.out, jobs=args.jobs, seed=args.seed)
    if result["status"] != "success":
        logger.error(f"{result['error_type']}: {result['message']}")
        return 1

    for name, ok in sorted(result["verdicts"].items()):
        logger.info(f"  {'PASS' if ok else 'FAIL'} {name}")
    logger.info(f"Output: {result['output_dir']}")
    return 0 if result["passed"] else 1


def _validate(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
        validate_config(config)
    except ConfigError as e:
        logger.error(f"Invalid config: {e}")
        return 1
    logger.info(f"✓ {args.config}: scenario={config.scenario}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for CLI."""
    args = parse_args(argv)
    if getattr(args, "verbose", False):
        logging.getLogger().setLevel(logging.DEBUG)

    if args.command == "list-scenarios":
        print(json.dumps(list_scenarios(), indent=2, ensure_ascii=False))
        return 0
    if args.command == "validate":
        return _validate(args)
    try:
        return _run(args)
    except Exception as e:
        logger.error(f"Unexpected error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
