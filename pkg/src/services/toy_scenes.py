"""
Synthetic driving scenes with exact labels: a flat road seen by a pinhole camera,
sky above the horizon, and fronto-parallel boxes standing on the road.

Camera: focal length = image width, principal point at the image center,
mounted CAMERA_HEIGHT_M above the ground with a level optical axis. A ground
pixel in row r (center r + 0.5) lies at depth f * CAMERA_HEIGHT_M / (r + 0.5 - cy).
"""
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ConfigDict

from src.models.registry import ClassRegistry
from src.models.sample import (
    CameraIntrinsics, DepthMap, ImageTensor, Sample, SemanticLabelMap, DEFAULT_DEPTH_CAP_M,
)
from src.validation.errors import ConfigurationError

logger = logging.getLogger(__name__)

CAMERA_HEIGHT_M = 1.6
SIZE_MULTIPLE = 32
TOY_DATASET_ID = "toy"

ROAD = "Road"
SKY = "Sky"

# class name: ((width range m), (height range m))
BOX_SHAPES = {
    "Car": ((1.6, 2.0), (1.3, 1.7)),
    "Building": ((6.0, 14.0), (5.0, 12.0)),
    "Person": ((0.5, 0.8), (1.6, 1.9)),
    "Pole": ((0.2, 0.4), (4.0, 7.0)),
    "Vegetation": ((2.0, 4.0), (2.5, 6.0)),
}

BOX_DEPTH_RANGE_M = (4.0, 40.0)
BOX_LATERAL_RANGE_M = (-6.0, 6.0)
MAX_BOXES = 3


class ToyBox(BaseModel):
    """Fronto-parallel box face standing on the ground plane."""
    class_name: str
    lateral_m: float = Field(..., description="Horizontal offset of the box center from the optical axis.")
    depth_m: float = Field(..., gt=0.0)
    width_m: float = Field(..., gt=0.0)
    height_m: float = Field(..., gt=0.0)

    model_config = ConfigDict(frozen=True)

    def pixel_extent(self, focal_px: float, cx: float, cy: float) -> Tuple[float, float, float, float]:
        """(left, right, top, bottom) image coordinates of the projected face."""
        scale = focal_px / self.depth_m
        left = cx + scale * (self.lateral_m - self.width_m / 2.0)
        right = cx + scale * (self.lateral_m + self.width_m / 2.0)
        top = cy + scale * (CAMERA_HEIGHT_M - self.height_m)
        bottom = cy + scale * CAMERA_HEIGHT_M
        return left, right, top, bottom


def _check_size(size: Union[int, Sequence[int]]) -> Tuple[int, int]:
    width, height = (size, size) if isinstance(size, int) else tuple(size)
    if width <= 0 or height <= 0 or width % SIZE_MULTIPLE or height % SIZE_MULTIPLE:
        raise ConfigurationError(
            f"toy size {width}x{height} must be positive and divisible by {SIZE_MULTIPLE}", field="size"
        )
    return int(width), int(height)


def ground_depth(row: int, width: int, height: int) -> float:
    """Analytic ground depth of an image row; inf at or above the horizon."""
    offset = row + 0.5 - height / 2.0
    return float(width) * CAMERA_HEIGHT_M / offset if offset > 0 else float("inf")


def render_toy_scene(
    boxes: Sequence[ToyBox],
    size: Union[int, Sequence[int]],
    registry: ClassRegistry,
    frame_id: str = "0000",
    depth_cap: float = DEFAULT_DEPTH_CAP_M,
) -> Sample:
    width, height = _check_size(size)
    for name in (ROAD, SKY) + tuple(b.class_name for b in boxes):
        if name not in registry.names:
            raise ConfigurationError(f"registry '{registry.name}' lacks class '{name}'", field="registry")

    focal = float(width)
    cx, cy = width / 2.0, height / 2.0
    rows = np.arange(height, dtype=np.float64)[:, None] + 0.5
    cols = np.arange(width, dtype=np.float64)[None, :] + 0.5

    below = np.broadcast_to(rows > cy, (height, width))
    depth = np.full((height, width), np.inf)
    depth[below] = np.broadcast_to(focal * CAMERA_HEIGHT_M / np.maximum(rows - cy, 1e-9), (height, width))[below]
    labels = np.where(below, registry.index_of(ROAD), registry.index_of(SKY))

    # painter's order: far boxes first
    for box in sorted(boxes, key=lambda b: -b.depth_m):
        left, right, top, bottom = box.pixel_extent(focal, cx, cy)
        covered = (cols >= left) & (cols < right) & (rows >= top) & (rows < bottom)
        depth[covered] = box.depth_m
        labels[covered] = registry.index_of(box.class_name)

    valid = np.isfinite(depth) & (depth <= depth_cap)
    palette = np.array(registry.rgb_codes, dtype=np.float64) / 255.0
    shade = 1.0 - 0.5 * np.minimum(depth, depth_cap) / depth_cap
    shade[labels == registry.index_of(SKY)] = 1.0
    image = palette[labels] * shade[..., None]

    return Sample(
        image=ImageTensor(data=image.astype(np.float32)),
        semantic=SemanticLabelMap(data=np.eye(len(registry), dtype=np.float32)[labels], registry=registry),
        depth=DepthMap(values=np.where(valid, depth, 0.0), valid_mask=valid, depth_cap=depth_cap),
        intrinsics=CameraIntrinsics(focal_length_px=focal, width_px=width, height_px=height),
        dataset_id=TOY_DATASET_ID,
        frame_id=frame_id,
    )


def _random_boxes(rng: np.random.Generator, registry: ClassRegistry) -> List[ToyBox]:
    classes = [name for name in BOX_SHAPES if name in registry.names]
    if not classes:
        return []
    boxes = []
    for _ in range(int(rng.integers(1, MAX_BOXES + 1))):
        name = classes[int(rng.integers(len(classes)))]
        (w_lo, w_hi), (h_lo, h_hi) = BOX_SHAPES[name]
        boxes.append(ToyBox(
            class_name=name,
            lateral_m=float(rng.uniform(*BOX_LATERAL_RANGE_M)),
            depth_m=float(rng.uniform(*BOX_DEPTH_RANGE_M)),
            width_m=float(rng.uniform(w_lo, w_hi)),
            height_m=float(rng.uniform(h_lo, h_hi)),
        ))
    return boxes


def generate_toy_dataset(
    n_samples: int,
    size: Union[int, Sequence[int]],
    registry: ClassRegistry,
    seed: int,
    depth_cap: Optional[float] = None,
) -> List[Sample]:
    """Deterministic in seed: frame i draws its boxes from default_rng([seed, i])."""
    if n_samples < 1:
        raise ConfigurationError(f"n_samples must be >= 1, got {n_samples}", field="n_samples")
    _check_size(size)
    cap = DEFAULT_DEPTH_CAP_M if depth_cap is None else depth_cap
    samples = []
    for i in range(n_samples):
        rng = np.random.default_rng([seed, i])
        samples.append(render_toy_scene(_random_boxes(rng, registry), size, registry, frame_id=f"{i:04d}", depth_cap=cap))
    logger.info(f"Generated {n_samples} toy scenes of size {size} with seed {seed}")
    return samples
