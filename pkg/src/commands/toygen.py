"""`toygen`: writes a synthetic toy dataset with analytic depth and labels."""
import argparse
import logging

from src.commands.common import CommandResult, parse_size
from src.presets import registry_preset
from src.services.datasets import write_dataset
from src.services.toy_scenes import TOY_DATASET_ID, generate_toy_dataset

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("toygen", help="Generate a deterministic toy dataset.")
    parser.add_argument("--n", type=int, required=True, help="Number of frames.")
    parser.add_argument("--size", type=int, nargs="+", default=[64], help="Frame size: S or W H (multiples of 32).")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--dataset-id", default=TOY_DATASET_ID)
    parser.add_argument("--train-fraction", type=float, default=0.75)
    parser.add_argument("--out", required=True, help="Dataset root; frames land in <out>/<dataset-id>/.")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> CommandResult:
    registry = registry_preset("common")
    samples = generate_toy_dataset(args.n, parse_size(args.size), registry, args.seed)
    samples = [s.model_copy(update={"dataset_id": args.dataset_id}) for s in samples]
    manifest = write_dataset(
        samples, args.out, args.dataset_id, registry_name="common",
        split_seed=args.seed, train_fraction=args.train_fraction,
    )
    return CommandResult(summary=f"toygen: wrote {len(samples)} frames of '{args.dataset_id}'", paths=[manifest])
