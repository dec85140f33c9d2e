import argparse
import logging
import sys
from typing import List, Optional

from src.commands import analyze, compare, evaluate, prepare, segment, toygen, train
from src.commands.common import CommandResult
from src.runtime.device import SEMDEPTH_LOG_LEVEL
from src.validation.errors import DepthToolkitError, UsageError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semdepth",
        description="Semantic-segmentation-assisted single-image depth estimation toolkit.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    # Register one subcommand per module
    for module in (prepare, toygen, train, evaluate, segment, analyze, compare):
        module.register(subparsers)
    return parser


def run_command(argv: Optional[List[str]] = None) -> CommandResult:
    """Parses argv and runs the command, mapping failures to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse already printed its message
        code = e.code if isinstance(e.code, int) else EXIT_USAGE
        return CommandResult(exit_code=code, summary="usage error" if code else "")

    try:
        return args.func(args)
    except UsageError as exc:
        return CommandResult(exit_code=EXIT_USAGE, summary=f"error: {exc}")
    except (DepthToolkitError, OSError) as exc:
        logger.debug("Command failed", exc_info=True)
        return CommandResult(exit_code=EXIT_FAILURE, summary=f"error: {exc}")


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=getattr(logging, SEMDEPTH_LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    result = run_command(argv)
    stream = sys.stdout if result.exit_code == EXIT_OK else sys.stderr
    for line in result.lines():
        if line:
            print(line, file=stream)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
