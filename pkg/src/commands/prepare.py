"""`prepare`: AFOV-unifies a dataset and optionally merges its labels into the common set."""
import argparse

from src.commands.common import CommandResult, parse_size
from src.presets.cameras import TARGET_SIZE
from src.services.preparation import prepare_dataset


def register(subparsers) -> None:
    parser = subparsers.add_parser("prepare", help="Crop to a reference AFOV, resize, merge labels.")
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--target-afov-ref", default="lyft", help="Reference camera preset; 'none' skips cropping.")
    parser.add_argument("--target-size", type=int, nargs="+", default=list(TARGET_SIZE), help="W H after resizing.")
    parser.add_argument("--merge-to-common", action="store_true", help="Map labels into the 11-class common set.")
    parser.add_argument("--dataset-id", default=None, help="Id of the prepared dataset (default: the source id).")
    parser.add_argument("--out", required=True, help="Root of the prepared dataset.")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> CommandResult:
    reference = None if args.target_afov_ref.lower() == "none" else args.target_afov_ref
    path = prepare_dataset(
        args.manifest,
        args.out,
        reference=reference,
        target_size=parse_size(args.target_size),
        merge_to_common=args.merge_to_common,
        dataset_id=args.dataset_id,
    )
    return CommandResult(summary="prepare: wrote prepared dataset", paths=[path])
