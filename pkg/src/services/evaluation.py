"""
Checkpoint evaluation on datasets, U-Net label generation and runtime measurement.
"""
import logging
import time
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import torch
import torch.nn as nn
from PIL import Image

from src.models.dataset import DatasetManifest
from src.models.metrics import IoUReport, MetricReport
from src.models.network import ModelSpec
from src.models.run import CheckpointEvaluation, CrossEvaluation
from src.models.sample import Sample
from src.networks.checkpoint import load_checkpoint
from src.networks.factory import forward, model_device, run_batch
from src.presets import registry_preset
from src.services.adaptation import onehot_to_rgb
from src.services.datasets import FRAME_EXTENSION, MANIFEST_FILENAME, load_manifest, load_samples, save_manifest
from src.services.metrics import IoUAccumulator, MetricAccumulator
from src.utils.converters import batch_samples
from src.validation.errors import IncompatibleCheckpointError

logger = logging.getLogger(__name__)

EVAL_BATCH_SIZE = 4
PREDICTED_SEMANTIC_DIR = "semantic_pred"

ManifestLike = Union[str, Path, DatasetManifest]


def _as_manifest(manifest: ManifestLike) -> DatasetManifest:
    return manifest if isinstance(manifest, DatasetManifest) else load_manifest(manifest)


def check_compatibility(spec: ModelSpec, manifest: DatasetManifest) -> None:
    """Raises when the manifest lacks a modality the variant needs for evaluation."""
    if spec.is_segmenter:
        if not manifest.has_semantic:
            raise IncompatibleCheckpointError(f"manifest lacks semantic labels: '{manifest.dataset_id}'",
                                              field="semantic")
        return
    if not manifest.has_depth:
        raise IncompatibleCheckpointError(f"manifest lacks depth: '{manifest.dataset_id}'", field="depth")
    if spec.uses_semantic and not manifest.has_semantic:
        raise IncompatibleCheckpointError(
            f"manifest lacks semantic labels required by {spec.variant.value}: '{manifest.dataset_id}' "
            f"(generate them with a U-Net first)",
            field="semantic",
        )


def check_sample_size(spec: ModelSpec, samples: Sequence[Sample], dataset_id: str) -> None:
    for sample in samples:
        if sample.size != tuple(spec.input_size):
            raise IncompatibleCheckpointError(
                f"'{dataset_id}' frame {sample.frame_id} is {sample.size[0]}x{sample.size[1]}, "
                f"model expects {spec.input_size[0]}x{spec.input_size[1]}",
                field="input_size",
            )


def _chunks(items: Sequence, size: int):
    for start in range(0, len(items), size):
        yield items[start:start + size]


def evaluate_samples(
    model: nn.Module, samples: Sequence[Sample], batch_size: int = EVAL_BATCH_SIZE
) -> Union[MetricReport, IoUReport]:
    """Pixel-weighted metrics over all samples (eval mode, no gradients)."""
    spec: ModelSpec = model.spec
    if spec.is_segmenter:
        registry = samples[0].semantic.registry
        accumulator = IoUAccumulator(spec.n_classes, registry.names if registry is not None else None)
    else:
        accumulator = MetricAccumulator()

    device = model_device(model)
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            for chunk in _chunks(list(samples), batch_size):
                batch = batch_samples(chunk, device)
                outputs = run_batch(model, batch)
                if spec.is_segmenter:
                    pred = outputs.segmentation.argmax(dim=1).cpu().numpy()
                    gt = batch["semantic"].argmax(dim=1).cpu().numpy()
                    accumulator.add(pred, gt)
                else:
                    valid = batch["valid"].cpu().numpy()
                    pred = outputs.depth.cpu().numpy()
                    gt = batch["depth"].cpu().numpy()
                    accumulator.add(pred[valid], gt[valid])
    finally:
        model.train(was_training)
    return accumulator.report()


def evaluate(checkpoint: Union[str, Path], manifest: ManifestLike, device: Optional[torch.device] = None):
    """MetricReport of a depth checkpoint, or IoUReport of a U-Net, over the whole manifest."""
    model, _ = load_checkpoint(checkpoint, device)
    manifest = _as_manifest(manifest)
    check_compatibility(model.spec, manifest)
    samples = load_samples(manifest)
    check_sample_size(model.spec, samples, manifest.dataset_id)
    report = evaluate_samples(model, samples)
    logger.info(f"Evaluated {checkpoint} on '{manifest.dataset_id}' ({len(samples)} frames)")
    return report


def generate_segmentation(
    unet_checkpoint: Union[str, Path],
    manifest: ManifestLike,
    out_dir: Union[str, Path],
    device: Optional[torch.device] = None,
) -> Path:
    """
    Writes argmax label images to <out_dir>/<dataset_id>/semantic_pred/ and a
    manifest copy pointing its semantic directory there. Returns the manifest path.
    """
    model, _ = load_checkpoint(unet_checkpoint, device)
    spec: ModelSpec = model.spec
    if not spec.is_segmenter:
        raise IncompatibleCheckpointError(f"{spec.variant.value} does not produce segmentations", field="checkpoint")
    manifest = _as_manifest(manifest)
    registry = registry_preset(manifest.registry_name)
    if len(registry) != spec.n_classes:
        raise IncompatibleCheckpointError(
            f"U-Net has {spec.n_classes} classes, registry '{registry.name}' has {len(registry)}", field="n_classes"
        )

    target_dir = (Path(out_dir) / manifest.dataset_id / PREDICTED_SEMANTIC_DIR).resolve()
    target_dir.mkdir(parents=True, exist_ok=True)
    image_only = manifest.model_copy(update={"frames": [f.model_copy(update={"semantic": None, "depth": None})
                                                        for f in manifest.frames]})
    samples = load_samples(image_only)
    check_sample_size(spec, samples, manifest.dataset_id)
    for chunk in _chunks(samples, EVAL_BATCH_SIZE):
        outputs = forward(model, chunk)
        for i, sample in enumerate(chunk):
            rgb = onehot_to_rgb(outputs.segmentation_map(i, registry), registry)
            Image.fromarray(rgb).save(target_dir / f"{sample.frame_id}{FRAME_EXTENSION}")

    labelled = manifest.model_copy(
        update={"root": Path(manifest.root).resolve(), "semantic_dir": str(target_dir), "frames": []}
    )
    path = save_manifest(labelled, Path(out_dir) / manifest.dataset_id / MANIFEST_FILENAME)
    logger.info(f"Wrote {len(samples)} predicted label maps to {target_dir}")
    return path


def cross_evaluate(
    checkpoints: Sequence[Union[str, Path]],
    manifests: Sequence[ManifestLike],
    device: Optional[torch.device] = None,
    strict: bool = False,
) -> CrossEvaluation:
    """Each checkpoint on each dataset; incompatible pairs are skipped with a warning unless strict."""
    loaded: List[DatasetManifest] = [_as_manifest(m) for m in manifests]
    samples = {}
    result = CrossEvaluation()
    for checkpoint in checkpoints:
        model, train_ids = load_checkpoint(checkpoint, device)
        for manifest in loaded:
            try:
                check_compatibility(model.spec, manifest)
                if manifest.dataset_id not in samples:
                    samples[manifest.dataset_id] = load_samples(manifest)
                check_sample_size(model.spec, samples[manifest.dataset_id], manifest.dataset_id)
            except IncompatibleCheckpointError as e:
                if strict:
                    raise
                logger.warning(f"Skipping {checkpoint} on '{manifest.dataset_id}': {e}")
                continue
            report = evaluate_samples(model, samples[manifest.dataset_id])
            result.cells.append(CheckpointEvaluation(
                checkpoint=Path(checkpoint),
                variant=model.spec.variant.value,
                dataset_id=manifest.dataset_id,
                in_domain=manifest.dataset_id in train_ids,
                metrics=dict(report.metric_items()),
            ))
    return result


def measure_runtime(model: nn.Module, sample: Sample, repeats: int = 10) -> float:
    """Mean wall time in seconds of a single prediction, after one warm-up pass."""
    forward(model, sample)
    timings = []
    for _ in range(max(repeats, 1)):
        start = time.perf_counter()
        forward(model, sample)
        timings.append(time.perf_counter() - start)
    return float(np.mean(timings))
