"""
Dataset adaptation: AFOV unification by centered cropping, resizing, RGB <-> one-hot
label conversion, class merging, and unit normalization of raw frames.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from src.models.dataset import CropPlan, MergeTable, RawSample
from src.models.registry import ClassRegistry
from src.models.sample import (
    CameraIntrinsics, DepthMap, ImageTensor, Sample, SemanticLabelMap, DEFAULT_DEPTH_CAP_M,
)
from src.presets.cameras import DEPTH_UNITS, TARGET_SIZE
from src.utils.geometry import afov_of, dim_for_afov
from src.validation.errors import ConfigurationError, RegistryMismatchError, ShapeMismatchError

logger = logging.getLogger(__name__)

# Pixel tolerance absorbing degree targets printed with two decimals.
CROP_ROUNDING_TOLERANCE_PX = 0.01


def _ceil_to_even(x: float) -> int:
    return 2 * math.ceil((x - CROP_ROUNDING_TOLERANCE_PX) / 2.0)


def _ceil(x: float) -> int:
    return math.ceil(x - CROP_ROUNDING_TOLERANCE_PX)


def plan_afov_crop(
    src: CameraIntrinsics,
    target_h_afov: float,
    target_v_afov: float,
    target_size: Tuple[int, int] = TARGET_SIZE,
) -> CropPlan:
    """Centered crop whose AFOV matches the targets; never larger than the source."""
    width = min(_ceil_to_even(dim_for_afov(target_h_afov, src.focal_length_px)), src.width_px)
    # widths round up to even, heights to the next integer
    height = min(_ceil(dim_for_afov(target_v_afov, src.focal_length_px)), src.height_px)
    origin = ((src.height_px - height) // 2, (src.width_px - width) // 2)
    achieved = (afov_of(width, src.focal_length_px), afov_of(height, src.focal_length_px))
    logger.debug(f"Crop plan f={src.focal_length_px}: {src.width_px}x{src.height_px} -> {width}x{height}, AFOV {achieved}")
    return CropPlan(
        source_intrinsics=src,
        crop_width_px=width,
        crop_height_px=height,
        crop_origin=origin,
        target_size=tuple(target_size),
        achieved_afov=achieved,
    )


def plan_afov_crop_to_reference(
    src: CameraIntrinsics,
    reference: CameraIntrinsics,
    target_size: Tuple[int, int] = TARGET_SIZE,
) -> CropPlan:
    """Crop plan whose targets are the exact AFOVs of a reference camera."""
    return plan_afov_crop(
        src,
        afov_of(reference.width_px, reference.focal_length_px),
        afov_of(reference.height_px, reference.focal_length_px),
        target_size,
    )


def _resize(tensor: torch.Tensor, size_hw: Tuple[int, int], mode: str) -> torch.Tensor:
    if tuple(tensor.shape[-2:]) == tuple(size_hw):
        return tensor
    if mode == "bilinear":
        return F.interpolate(tensor[None], size=size_hw, mode="bilinear", align_corners=False)[0]
    return F.interpolate(tensor[None], size=size_hw, mode="nearest-exact")[0]


def apply_crop_resize(sample: Sample, plan: CropPlan) -> Sample:
    """Crops every modality with the plan, then resizes to plan.target_size."""
    src = plan.source_intrinsics
    expected = (src.height_px, src.width_px)
    checks = [("image", (sample.image.height, sample.image.width))]
    if sample.semantic is not None:
        checks.append(("semantic", (sample.semantic.height, sample.semantic.width)))
    if sample.depth is not None:
        checks.append(("depth", (sample.depth.height, sample.depth.width)))
    for field, dims in checks:
        if dims != expected:
            raise ShapeMismatchError(
                f"{field} is {dims[0]}x{dims[1]} but the crop plan expects {expected[0]}x{expected[1]}",
                field=field,
            )

    r0, c0 = plan.crop_origin
    rows = slice(r0, r0 + plan.crop_height_px)
    cols = slice(c0, c0 + plan.crop_width_px)
    tw, th = plan.target_size
    size_hw = (th, tw)

    image = torch.from_numpy(np.ascontiguousarray(sample.image.data[rows, cols].transpose(2, 0, 1)))
    image = _resize(image, size_hw, "bilinear").clamp_(0.0, 1.0)
    update = {"image": ImageTensor(data=image.permute(1, 2, 0).numpy())}

    if sample.semantic is not None:
        sem = torch.from_numpy(np.ascontiguousarray(sample.semantic.data[rows, cols].transpose(2, 0, 1)))
        sem = _resize(sem, size_hw, "nearest")
        update["semantic"] = SemanticLabelMap(data=sem.permute(1, 2, 0).numpy(), registry=sample.semantic.registry)

    if sample.depth is not None:
        values = torch.from_numpy(np.ascontiguousarray(sample.depth.values[rows, cols]))[None]
        mask = torch.from_numpy(np.ascontiguousarray(sample.depth.valid_mask[rows, cols], dtype=np.float32))[None]
        values = _resize(values, size_hw, "nearest")[0].numpy()
        mask = _resize(mask, size_hw, "nearest")[0].numpy() > 0.5
        update["depth"] = DepthMap(values=values, valid_mask=mask, depth_cap=sample.depth.depth_cap)

    update["intrinsics"] = CameraIntrinsics(
        focal_length_px=src.focal_length_px * tw / plan.crop_width_px,
        width_px=tw,
        height_px=th,
    )
    return sample.model_copy(update=update)


def _pack_rgb(rgb: np.ndarray) -> np.ndarray:
    rgb = rgb.astype(np.int64)
    return (rgb[..., 0] << 16) | (rgb[..., 1] << 8) | rgb[..., 2]


def rgb_to_onehot(label_image: np.ndarray, registry: ClassRegistry) -> Tuple[SemanticLabelMap, int]:
    """
    Exact palette lookup. Unmatched colours fall back to channel 0 (Unlabeled);
    their count is returned for diagnostics.
    """
    label_image = np.asarray(label_image)
    if label_image.ndim != 3 or label_image.shape[2] != 3:
        raise ShapeMismatchError(f"label image must be H x W x 3, got {label_image.shape}", field="label_image")
    keys = _pack_rgb(label_image)
    codes = _pack_rgb(np.array(registry.rgb_codes))
    order = np.argsort(codes)
    sorted_codes = codes[order]
    pos = np.clip(np.searchsorted(sorted_codes, keys), 0, len(sorted_codes) - 1)
    matched = sorted_codes[pos] == keys
    indices = np.where(matched, order[pos], 0)
    onehot = np.eye(len(registry), dtype=np.float32)[indices]
    unmatched = int((~matched).sum())
    if unmatched:
        logger.debug(f"rgb_to_onehot: {unmatched} pixels matched no colour of registry '{registry.name}'")
    return SemanticLabelMap(data=onehot, registry=registry), unmatched


def onehot_to_rgb(label_map: SemanticLabelMap, registry: ClassRegistry) -> np.ndarray:
    """Per-pixel argmax channel's colour; ties go to the lowest channel."""
    if label_map.channels != len(registry):
        raise ShapeMismatchError(
            f"label map has {label_map.channels} channels, registry '{registry.name}' has {len(registry)}",
            field="semantic",
        )
    palette = np.array(registry.rgb_codes, dtype=np.uint8)
    return palette[label_map.class_indices()]


def merge_classes(label_map: SemanticLabelMap, table: MergeTable) -> SemanticLabelMap:
    """Target channel = sum of the source channels mapped onto it."""
    if label_map.registry is not None and label_map.registry != table.source_registry:
        raise RegistryMismatchError(
            f"label map registry '{label_map.registry.name}' is not the merge source "
            f"'{table.source_registry.name}'",
            field="semantic",
        )
    if label_map.channels != len(table.source_registry):
        raise RegistryMismatchError(
            f"label map has {label_map.channels} channels, merge source has {len(table.source_registry)}",
            field="semantic",
        )
    merged = np.einsum("hwn,nm->hwm", label_map.data, table.matrix())
    return SemanticLabelMap(data=merged, registry=table.target_registry)


def merge_sample_classes(sample: Sample, table: MergeTable) -> Sample:
    if sample.semantic is None:
        return sample
    return sample.with_semantic(merge_classes(sample.semantic, table))


def depth_scale(unit: str) -> float:
    try:
        return DEPTH_UNITS[unit]
    except KeyError:
        raise ConfigurationError(
            f"unknown depth unit '{unit}'. Known: {sorted(DEPTH_UNITS)}", field="depth_unit"
        ) from None


def normalize_and_convert(
    raw: RawSample,
    depth_unit: str,
    depth_cap: float = DEFAULT_DEPTH_CAP_M,
    registry: Optional[ClassRegistry] = None,
) -> Sample:
    """8-bit image -> [0, 1]; raw depth counts -> meters with validity mask; labels -> one-hot."""
    scale = depth_scale(depth_unit)
    image = ImageTensor(data=np.asarray(raw.image_u8, dtype=np.float32) / 255.0)

    depth = None
    if raw.depth_raw is not None:
        counts = np.asarray(raw.depth_raw, dtype=np.float64)
        meters = counts * scale
        valid = (counts > 0) & (meters <= depth_cap)
        depth = DepthMap(values=meters, valid_mask=valid, depth_cap=depth_cap)

    semantic = None
    if raw.label_rgb is not None:
        if registry is None:
            raise ConfigurationError("a registry is required to decode label images", field="registry")
        semantic, unmatched = rgb_to_onehot(raw.label_rgb, registry)
        if unmatched:
            logger.warning(f"{raw.dataset_id}/{raw.frame_id}: {unmatched} label pixels fell back to Unlabeled")

    return Sample(
        image=image,
        semantic=semantic,
        depth=depth,
        intrinsics=raw.intrinsics,
        dataset_id=raw.dataset_id,
        frame_id=raw.frame_id,
    )
