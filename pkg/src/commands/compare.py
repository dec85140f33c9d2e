"""`compare`: windowed-average and relative-superiority tables plus curves from run logs."""
import argparse
from pathlib import Path

from src.commands.common import CommandResult
from src.validation.errors import UsageError
from src.services.reporting import DEFAULT_WINDOW, emit_report


def register(subparsers) -> None:
    parser = subparsers.add_parser("compare", help="Tabulate and plot run logs.")
    parser.add_argument("--logs", nargs="+", required=True, metavar="[NAME=]RUN_LOG_CSV",
                        help="Run logs, optionally labelled; the first one is the reference.")
    parser.add_argument("--from-epoch", type=float, default=DEFAULT_WINDOW[0])
    parser.add_argument("--to-epoch", type=float, default=DEFAULT_WINDOW[1])
    parser.add_argument("--split", default=None, help="Split to average (default: first test split).")
    parser.add_argument("--steps-per-epoch", type=int, default=None,
                        help="Convert steps to epochs; otherwise the n-th evaluation is epoch n.")
    parser.add_argument("--out", required=True)
    parser.set_defaults(func=run)


def _label(item: str) -> tuple:
    if "=" in item:
        name, path = item.split("=", 1)
        return name, Path(path)
    path = Path(item)
    return path.parent.name or path.stem, path


def run(args: argparse.Namespace) -> CommandResult:
    logs = dict(_label(item) for item in args.logs)
    if len(logs) != len(args.logs):
        raise UsageError("run log labels must be unique", field="logs")
    paths = emit_report(
        logs, None, args.out,
        window=(args.from_epoch, args.to_epoch),
        split=args.split,
        steps_per_epoch=args.steps_per_epoch,
    )
    return CommandResult(summary=f"compare: {len(logs)} run(s)", paths=paths)
