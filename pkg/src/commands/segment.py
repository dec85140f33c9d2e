"""`segment`: writes U-Net label predictions for a dataset."""
import argparse

from src.commands.common import CommandResult
from src.services.evaluation import generate_segmentation


def register(subparsers) -> None:
    parser = subparsers.add_parser("segment", help="Generate semantic labels with a U-Net checkpoint.")
    parser.add_argument("--checkpoint", required=True)
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--out", required=True, help="Root receiving <dataset_id>/semantic_pred/ and a manifest.")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace) -> CommandResult:
    manifest = generate_segmentation(args.checkpoint, args.manifest, args.out)
    return CommandResult(summary="segment: wrote predicted label maps", paths=[manifest])
