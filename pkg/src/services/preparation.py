"""
Turns a source dataset into a prepared one: AFOV-unified crop, resize to the
common size, optional merge into the common class set.
"""
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

from src.models.dataset import DatasetManifest
from src.presets import afov_reference, merge_table_preset, palettes
from src.presets.cameras import TARGET_SIZE
from src.services.adaptation import apply_crop_resize, merge_sample_classes, plan_afov_crop_to_reference
from src.services.datasets import load_manifest, load_samples, write_dataset
from src.validation.errors import ConfigurationError, DatasetError

logger = logging.getLogger(__name__)

PREPARED_DEPTH_UNIT = "1/256m"


def prepare_dataset(
    manifest: Union[str, Path, DatasetManifest],
    out_root: Union[str, Path],
    reference: Optional[str] = "lyft",
    target_size: Tuple[int, int] = TARGET_SIZE,
    merge_to_common: bool = False,
    dataset_id: Optional[str] = None,
) -> Path:
    """Writes <out_root>/<dataset_id>/ and returns its manifest path."""
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(manifest)
    if not manifest.frames:
        raise DatasetError(f"'{manifest.dataset_id}' has no frames", field="frames")
    try:
        reference_camera = afov_reference(reference) if reference else None
        table = merge_table_preset(manifest.registry_name) if merge_to_common else None
    except (KeyError, ValueError) as e:
        raise ConfigurationError(str(e), field="reference" if reference else "registry_name") from e

    prepared = []
    for sample in load_samples(manifest):
        if reference_camera is not None:
            plan = plan_afov_crop_to_reference(sample.intrinsics, reference_camera, target_size)
            sample = apply_crop_resize(sample, plan)
        if table is not None:
            sample = merge_sample_classes(sample, table)
        prepared.append(sample)

    registry_name = palettes.COMMON if table is not None else manifest.registry_name
    path = write_dataset(
        prepared,
        out_root,
        dataset_id or manifest.dataset_id,
        registry_name=registry_name,
        depth_unit=PREPARED_DEPTH_UNIT,
        depth_cap=manifest.depth_cap,
        split_seed=manifest.split_seed,
        train_fraction=manifest.train_fraction,
    )
    logger.info(f"Prepared '{manifest.dataset_id}' -> {path}")
    return path
