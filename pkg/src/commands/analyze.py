"""`analyze`: depth-distribution and accuracy heat maps."""
import argparse
import csv
from pathlib import Path

from src.commands.common import CommandResult
from src.models.analysis import GLOBAL, PER_ROW
from src.networks.checkpoint import load_checkpoint
from src.services.analysis import (
    DEFAULT_BIN_M, DEFAULT_ERROR_BIN_M, DEFAULT_RANGE_M, depth_heatmap, model_accuracy_heatmap,
    pairwise_heatmap_distances,
)
from src.services.datasets import load_manifest, load_samples
from src.services.evaluation import check_compatibility
from src.services.reporting import emit_report

DISTANCES_FILENAME = "heatmap_distances.csv"


def register(subparsers) -> None:
    parser = subparsers.add_parser("analyze", help="Dataset and model statistics.")
    analyses = parser.add_subparsers(dest="analysis", required=True)

    depth = analyses.add_parser("depth-heatmap", help="Per-row depth histograms of one or more datasets.")
    depth.add_argument("--manifest", nargs="+", required=True)
    depth.add_argument("--range-m", type=float, default=DEFAULT_RANGE_M)
    depth.add_argument("--bin-m", type=float, default=DEFAULT_BIN_M)
    depth.add_argument("--normalization", choices=[GLOBAL, PER_ROW], default=GLOBAL)
    depth.add_argument("--out", required=True)
    depth.set_defaults(func=run_depth_heatmap)

    accuracy = analyses.add_parser("accuracy-heatmap", help="Error histograms per distance range of a checkpoint.")
    accuracy.add_argument("--checkpoint", required=True)
    accuracy.add_argument("--manifest", required=True)
    accuracy.add_argument("--error-bin-m", type=float, default=DEFAULT_ERROR_BIN_M)
    accuracy.add_argument("--out", required=True)
    accuracy.set_defaults(func=run_accuracy_heatmap)


def write_distances(names, distances, path: Path) -> Path:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["dataset"] + list(names))
        for name, row in zip(names, distances):
            writer.writerow([name] + [repr(float(v)) for v in row])
    return path


def run_depth_heatmap(args: argparse.Namespace) -> CommandResult:
    heatmaps = {}
    for path in args.manifest:
        manifest = load_manifest(path)
        heatmaps[manifest.dataset_id] = depth_heatmap(manifest, args.range_m, args.bin_m, args.normalization)
    out = Path(args.out)
    paths = emit_report({}, heatmaps, out)
    if len(heatmaps) > 1:
        names = list(heatmaps)
        distances = pairwise_heatmap_distances([heatmaps[n] for n in names])
        paths.append(write_distances(names, distances, out / DISTANCES_FILENAME))
    return CommandResult(summary=f"analyze depth-heatmap: {len(heatmaps)} dataset(s)", paths=paths)


def run_accuracy_heatmap(args: argparse.Namespace) -> CommandResult:
    model, _ = load_checkpoint(args.checkpoint)
    manifest = load_manifest(args.manifest)
    check_compatibility(model.spec, manifest)
    heatmap = model_accuracy_heatmap(model, load_samples(manifest), error_bin=args.error_bin_m)
    name = f"{model.spec.variant.value}_{manifest.dataset_id}"
    paths = emit_report({}, {name: heatmap}, args.out)
    return CommandResult(summary=f"analyze accuracy-heatmap: {name}", paths=paths)
