"""
Lookup helpers turning the preset constant tables into domain objects.
"""
from typing import List, Tuple

from src.models.registry import ClassRegistry, UNLABELED
from src.models.sample import CameraIntrinsics
from src.models.dataset import MergeTable
from src.presets import palettes
from src.presets.cameras import CAMERAS, AFOV_REFERENCES


def camera_preset(name: str) -> CameraIntrinsics:
    key = name.lower()
    if key not in CAMERAS:
        raise KeyError(f"unknown camera preset '{name}'. Known: {sorted(CAMERAS)}")
    f, w, h = CAMERAS[key]
    return CameraIntrinsics(focal_length_px=f, width_px=w, height_px=h)


def afov_reference(name: str) -> CameraIntrinsics:
    key = name.lower()
    if key not in AFOV_REFERENCES:
        raise KeyError(f"unknown AFOV reference '{name}'. Known: {sorted(AFOV_REFERENCES)}")
    f, w, h = AFOV_REFERENCES[key]
    return CameraIntrinsics(focal_length_px=f, width_px=w, height_px=h)


def _dataset_pairs(dataset: str) -> List[Tuple[str, tuple]]:
    column = palettes.DATASET_COLUMNS.index(dataset)
    pairs = [(UNLABELED, (0, 0, 0))]
    for name, codes, _ in palettes.LABEL_TABLE:
        code = codes[column]
        if code is not None and name != UNLABELED:
            pairs.append((name, code))
    return pairs


def registry_preset(name: str) -> ClassRegistry:
    key = name.lower()
    if key == palettes.COMMON:
        return ClassRegistry.from_pairs(palettes.COMMON, palettes.COMMON_SET)
    if key not in palettes.DATASET_COLUMNS:
        known = sorted(palettes.DATASET_COLUMNS + (palettes.COMMON,))
        raise KeyError(f"unknown registry preset '{name}'. Known: {known}")
    return ClassRegistry.from_pairs(key, _dataset_pairs(key))


def merge_table_preset(dataset: str) -> MergeTable:
    """Merge table from a dataset palette into the common set."""
    source = registry_preset(dataset)
    targets = {name: merges_to for name, _, merges_to in palettes.LABEL_TABLE}
    mapping = {name: targets[name] for name in source.names}
    return MergeTable(mapping=mapping, source_registry=source, target_registry=registry_preset(palettes.COMMON))
