"""
Dataset persistence: manifest loading with frame discovery, deterministic
train/test splits, and PNG reading/writing of samples.

Layout: <root>/<dataset_id>/{image,semantic,depth}/<frame_id>.png
"""
import json
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
from PIL import Image

from src.models.dataset import DatasetManifest, FrameEntry, RawSample
from src.models.registry import ClassRegistry
from src.models.sample import CameraIntrinsics, Sample, DEFAULT_DEPTH_CAP_M
from src.presets import registry_preset
from src.runtime.device import data_root
from src.services.adaptation import depth_scale, normalize_and_convert, onehot_to_rgb
from src.validation.errors import ConfigurationError, DatasetError

logger = logging.getLogger(__name__)

FRAME_EXTENSION = ".png"
MANIFEST_FILENAME = "manifest.json"

T = TypeVar("T")


def _discover_frames(manifest: DatasetManifest) -> List[FrameEntry]:
    image_dir = manifest.modality_dir("image")
    if not image_dir.is_dir():
        raise DatasetError(f"image directory not found: {image_dir}", field="image", missing_paths=[image_dir])
    frame_ids = sorted(p.stem for p in image_dir.glob(f"*{FRAME_EXTENSION}"))
    if not frame_ids:
        raise DatasetError(f"no frames in {image_dir}", field="image")

    optional = {name: manifest.modality_dir(name) for name in ("semantic", "depth")}
    present = {name: path for name, path in optional.items() if path.is_dir()}

    missing: List[Path] = []
    frames: List[FrameEntry] = []
    for frame_id in frame_ids:
        entry = {"frame_id": frame_id, "image": image_dir / f"{frame_id}{FRAME_EXTENSION}"}
        for name, directory in present.items():
            path = directory / f"{frame_id}{FRAME_EXTENSION}"
            if not path.is_file():
                missing.append(path)
            entry[name] = path
        frames.append(FrameEntry(**entry))
    if missing:
        listing = ", ".join(str(p) for p in missing)
        raise DatasetError(f"{len(missing)} files missing: {listing}", field="frames", missing_paths=missing)
    return frames


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """
    Reads a manifest JSON file and resolves its frames. A relative root is taken
    relative to the manifest file; an absent root falls back to SEMDEPTH_DATA_ROOT.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"manifest not found: {path}", field="manifest", missing_paths=[path])
    data = json.loads(path.read_text())
    root = Path(data.get("root") or data_root())
    if not root.is_absolute():
        root = (path.parent / root).resolve()
    data["root"] = root
    try:
        manifest = DatasetManifest.model_validate(data)
    except ValueError as e:
        raise ConfigurationError(f"invalid manifest {path}: {e}", field="manifest") from e
    manifest = manifest.model_copy(update={"frames": _discover_frames(manifest)})
    logger.info(
        f"Loaded manifest '{manifest.dataset_id}': {len(manifest.frames)} frames "
        f"(semantic={manifest.has_semantic}, depth={manifest.has_depth})"
    )
    return manifest


def save_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2, exclude={"frames"}))
    return path


def split_dataset(items: Sequence[T], train_fraction: float, seed: int) -> Tuple[List[T], List[T]]:
    """Deterministic shuffle by seed, then the first round(n * fraction) go to train."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigurationError(f"train_fraction must lie in (0, 1), got {train_fraction}", field="train_fraction")
    n = len(items)
    n_train = int(round(n * train_fraction))
    if n_train == 0 or n_train == n:
        raise DatasetError(f"split too small: {n} frames at train_fraction {train_fraction}", field="split")
    order = np.random.default_rng(seed).permutation(n)
    train = [items[i] for i in order[:n_train]]
    test = [items[i] for i in order[n_train:]]
    return train, test


def split_manifest(manifest: DatasetManifest) -> Tuple[List[FrameEntry], List[FrameEntry]]:
    return split_dataset(manifest.frames, manifest.train_fraction, manifest.split_seed)


def _read_rgb(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.array(img.convert("RGB"), dtype=np.uint8)


def _read_depth_counts(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.array(img, dtype=np.int64)


def read_raw_sample(manifest: DatasetManifest, frame: FrameEntry) -> RawSample:
    image = _read_rgb(frame.image)
    height, width = image.shape[:2]
    return RawSample(
        image_u8=image,
        label_rgb=_read_rgb(frame.semantic) if frame.semantic is not None else None,
        depth_raw=_read_depth_counts(frame.depth) if frame.depth is not None else None,
        intrinsics=CameraIntrinsics(focal_length_px=manifest.focal_length_px, width_px=width, height_px=height),
        dataset_id=manifest.dataset_id,
        frame_id=frame.frame_id,
    )


def load_samples(manifest: DatasetManifest, frames: Optional[Sequence[FrameEntry]] = None) -> List[Sample]:
    """Reads and normalizes frames in manifest order."""
    frames = manifest.frames if frames is None else frames
    registry = registry_preset(manifest.registry_name)
    samples = [
        normalize_and_convert(read_raw_sample(manifest, frame), manifest.depth_unit, manifest.depth_cap, registry)
        for frame in frames
    ]
    logger.info(f"Read {len(samples)} samples of '{manifest.dataset_id}'")
    return samples


def write_sample(
    sample: Sample,
    dataset_dir: Path,
    registry: ClassRegistry,
    depth_unit: str = "1/256m",
) -> None:
    """Writes image (8-bit RGB), labels (RGB palette) and depth (16-bit counts, 0 = invalid)."""
    name = f"{sample.frame_id}{FRAME_EXTENSION}"
    image_dir = dataset_dir / "image"
    image_dir.mkdir(parents=True, exist_ok=True)
    pixels = np.clip(np.rint(sample.image.data * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(pixels).save(image_dir / name)

    if sample.semantic is not None:
        semantic_dir = dataset_dir / "semantic"
        semantic_dir.mkdir(parents=True, exist_ok=True)
        Image.fromarray(onehot_to_rgb(sample.semantic, registry)).save(semantic_dir / name)

    if sample.depth is not None:
        depth_dir = dataset_dir / "depth"
        depth_dir.mkdir(parents=True, exist_ok=True)
        counts = np.rint(sample.depth.values.astype(np.float64) / depth_scale(depth_unit))
        counts = np.where(sample.depth.valid_mask, np.clip(counts, 1, 65535), 0).astype(np.uint16)
        Image.fromarray(counts).save(depth_dir / name)


def write_dataset(
    samples: Sequence[Sample],
    root: Union[str, Path],
    dataset_id: str,
    registry_name: str = "common",
    depth_unit: str = "1/256m",
    **manifest_fields,
) -> Path:
    """Writes every sample plus <root>/<dataset_id>/manifest.json; returns the manifest path."""
    if not samples:
        raise DatasetError("no samples to write", field="samples")
    root = Path(root).resolve()
    registry = registry_preset(registry_name)
    default_cap = samples[0].depth.depth_cap if samples[0].depth is not None else DEFAULT_DEPTH_CAP_M
    depth_cap = manifest_fields.pop("depth_cap", default_cap)
    dataset_dir = root / dataset_id
    for sample in samples:
        write_sample(sample, dataset_dir, registry, depth_unit)
    manifest = DatasetManifest(
        dataset_id=dataset_id,
        root=root,
        focal_length_px=samples[0].intrinsics.focal_length_px,
        depth_unit=depth_unit,
        registry_name=registry_name,
        depth_cap=depth_cap,
        **manifest_fields,
    )
    path = save_manifest(manifest, dataset_dir / MANIFEST_FILENAME)
    logger.info(f"Wrote {len(samples)} frames of '{dataset_id}' to {dataset_dir}")
    return path
