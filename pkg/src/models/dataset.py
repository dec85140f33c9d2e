from typing import Dict, List, Optional, Tuple
from pathlib import Path
import numpy as np
from pydantic import BaseModel, Field, ConfigDict, model_validator

from src.models.registry import ClassRegistry, UNLABELED
from src.models.sample import CameraIntrinsics, DEFAULT_DEPTH_CAP_M

# Merge target meaning "drop the class": its pixels become Unlabeled.
REMOVE = "REMOVE"


class CropPlan(BaseModel):
    """Centered crop reducing a camera's AFOV, followed by a resize to target_size."""
    source_intrinsics: CameraIntrinsics
    crop_width_px: int = Field(..., gt=0)
    crop_height_px: int = Field(..., gt=0)
    crop_origin: Tuple[int, int] = Field(..., description="(row, col) of the crop's top-left pixel.")
    target_size: Tuple[int, int] = Field((1216, 352), description="(width, height) after resizing.")
    achieved_afov: Tuple[float, float] = Field(..., description="(horizontal, vertical) degrees of the crop.")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_crop(self):
        src = self.source_intrinsics
        if self.crop_width_px > src.width_px or self.crop_height_px > src.height_px:
            raise ValueError(
                f"crop {self.crop_width_px}x{self.crop_height_px} exceeds source {src.width_px}x{src.height_px}"
            )
        return self


class MergeTable(BaseModel):
    """Maps every source class name to one target class name (REMOVE -> Unlabeled)."""
    mapping: Dict[str, str]
    source_registry: ClassRegistry
    target_registry: ClassRegistry

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_mapping(self):
        resolved = {src: (UNLABELED if dst == REMOVE else dst) for src, dst in self.mapping.items()}
        missing = [n for n in self.source_registry.names if n not in resolved]
        if missing:
            raise ValueError(f"merge table lacks source classes: {missing}")
        extra = [n for n in resolved if n not in self.source_registry.names]
        if extra:
            raise ValueError(f"merge table maps unknown source classes: {extra}")
        unknown = sorted({d for d in resolved.values() if d not in self.target_registry.names})
        if unknown:
            raise ValueError(f"merge targets not in target registry '{self.target_registry.name}': {unknown}")
        object.__setattr__(self, "mapping", resolved)
        return self

    def matrix(self) -> np.ndarray:
        """(n_source, n_target) 0/1 matrix; each row has exactly one 1."""
        m = np.zeros((len(self.source_registry), len(self.target_registry)), dtype=np.float32)
        for i, name in enumerate(self.source_registry.names):
            m[i, self.target_registry.index_of(self.mapping[name])] = 1.0
        return m


class FrameEntry(BaseModel):
    """Resolved file triplet of one frame."""
    frame_id: str
    image: Path
    semantic: Optional[Path] = None
    depth: Optional[Path] = None


class DatasetManifest(BaseModel):
    """Dataset description stored as JSON; frames are discovered from the directory layout."""
    dataset_id: str = Field(..., min_length=1)
    root: Path = Field(..., description="Directory holding <dataset_id>/{image,semantic,depth}/.")
    focal_length_px: float = Field(..., gt=0.0)
    depth_unit: str = Field("1/256m", description="Raw-count unit of 16-bit depth files.")
    registry_name: str = Field("common", description="Registry preset decoding the RGB label files.")
    split_seed: int = 0
    train_fraction: float = Field(0.75, gt=0.0, lt=1.0)
    depth_cap: float = Field(DEFAULT_DEPTH_CAP_M, gt=0.0)
    image_dir: str = "image"
    semantic_dir: str = "semantic"
    depth_dir: str = "depth"
    frames: List[FrameEntry] = Field(default_factory=list, description="Filled by load_manifest.")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "dataset_id": "toy",
                "root": "/data",
                "focal_length_px": 64.0,
                "depth_unit": "1/256m",
                "registry_name": "common",
                "split_seed": 0,
                "train_fraction": 0.75,
            }
        }
    )

    @property
    def dataset_dir(self) -> Path:
        return Path(self.root) / self.dataset_id

    def modality_dir(self, name: str) -> Path:
        # absolute directories (e.g. generated labels) override the root layout
        return self.dataset_dir / getattr(self, f"{name}_dir")

    @property
    def has_depth(self) -> bool:
        return bool(self.frames) and all(f.depth is not None for f in self.frames)

    @property
    def has_semantic(self) -> bool:
        return bool(self.frames) and all(f.semantic is not None for f in self.frames)


class RawSample(BaseModel):
    """Frame as read from disk: 8-bit image, RGB label image, raw depth counts."""
    image_u8: np.ndarray
    label_rgb: Optional[np.ndarray] = None
    depth_raw: Optional[np.ndarray] = None
    intrinsics: CameraIntrinsics
    dataset_id: str
    frame_id: str

    model_config = ConfigDict(arbitrary_types_allowed=True)
