import argparse
import logging
import sys
from typing import Optional, Sequence

from config import settings
from models import BohmError, Command
from services import commands
from utils.logging_config import setup_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bohm",
        description="Quantum-potential trajectories: run scenarios, validate, plot")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    run = sub.add_parser("run", help="run one scenario and write a run directory")
    run.add_argument("--config", required=True, metavar="PATH", help="scenario config file")
    run.add_argument("--out", metavar="DIR", help="run directory (default runs/<config name>)")
    run.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="override a config key; repeatable")

    validate = sub.add_parser("validate", help="run the acceptance checks")
    validate.add_argument("--only", metavar="NAME", help="run a single check group")

    plot = sub.add_parser("plot", help="render SVG plots of a run directory")
    plot.add_argument("run_dir", nargs="?", metavar="RUN_DIR")
    plot.add_argument("--out", metavar="DIR", help="run directory (same as RUN_DIR)")
    return parser


def to_command(args: argparse.Namespace) -> Command:
    if args.subcommand == "run":
        return Command(subcommand="run", config=args.config, out=args.out,
                       overrides=tuple(args.overrides))
    if args.subcommand == "validate":
        return Command(subcommand="validate", only=args.only)
    return Command(subcommand="plot", out=args.run_dir or args.out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup_logging(settings.log_level, settings.log_dir)
        cmd = to_command(args)
        logger.debug(f"Command: {cmd}")
        return commands.execute(cmd)
    except BohmError as exc:
        logger.error(exc.detail)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
