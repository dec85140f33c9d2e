"""`eval`: evaluates checkpoints on datasets and writes a long-format metrics CSV."""
import argparse
import csv
from pathlib import Path

from src.commands.common import CommandResult
from src.models.run import CrossEvaluation
from src.services.evaluation import cross_evaluate

EVALUATION_FILENAME = "evaluation.csv"
EVALUATION_HEADER = ["checkpoint", "variant", "dataset_id", "in_domain", "metric_name", "value"]


def register(subparsers) -> None:
    parser = subparsers.add_parser("eval", help="Evaluate checkpoint(s) on dataset manifest(s).")
    parser.add_argument("--checkpoint", nargs="+", required=True)
    parser.add_argument("--manifest", nargs="+", required=True)
    parser.add_argument("--out", default=None, help=f"Directory for {EVALUATION_FILENAME}.")
    parser.set_defaults(func=run)


def write_evaluation(result: CrossEvaluation, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(EVALUATION_HEADER)
        for cell in result.cells:
            for name, value in cell.metrics.items():
                writer.writerow([cell.checkpoint, cell.variant, cell.dataset_id, int(cell.in_domain), name, repr(value)])
    return path


def run(args: argparse.Namespace) -> CommandResult:
    # a single pair must be compatible; grids skip incompatible cells
    strict = len(args.checkpoint) == 1 and len(args.manifest) == 1
    result = cross_evaluate(args.checkpoint, args.manifest, strict=strict)
    paths = []
    if args.out is not None:
        paths.append(write_evaluation(result, Path(args.out) / EVALUATION_FILENAME))
    if strict and result.cells:
        cell = result.cells[0]
        name, value = next(iter(cell.metrics.items()))
        summary = f"eval: {cell.variant} on '{cell.dataset_id}': {name}={value:.4f}"
    else:
        summary = f"eval: {len(result.cells)} checkpoint/dataset pairs evaluated"
    return CommandResult(summary=summary, paths=paths)
