"""
Per-frame domain types: image, label map, depth map, camera and the sample
bundling them. Arrays are stored channel-last as read-only numpy copies, so a
constructed value can be shared freely.
"""
from typing import Optional, Tuple
import numpy as np
from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator

from src.models.registry import ClassRegistry

DEFAULT_DEPTH_CAP_M = 100.0


def _frozen_array(value, dtype) -> np.ndarray:
    arr = np.array(value, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class CameraIntrinsics(BaseModel):
    """Pinhole camera: focal length and sensor/crop size, all in pixels."""
    focal_length_px: float = Field(..., gt=0.0)
    width_px: int = Field(..., gt=0)
    height_px: int = Field(..., gt=0)

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={"example": {"focal_length_px": 880.0, "width_px": 1224, "height_px": 1024}},
    )


class ImageTensor(BaseModel):
    """H x W x 3 RGB image, values expected in [0, 1] after preparation."""
    data: np.ndarray

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("data", mode="before")
    @classmethod
    def _coerce(cls, v):
        arr = _frozen_array(v, np.float32)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"image must be H x W x 3, got shape {arr.shape}")
        return arr

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])


class SemanticLabelMap(BaseModel):
    """H x W x n class map; one-hot for ground truth, probabilities for predictions."""
    data: np.ndarray
    registry: Optional[ClassRegistry] = Field(None, description="Registry whose order defines the channels.")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("data", mode="before")
    @classmethod
    def _coerce(cls, v):
        arr = _frozen_array(v, np.float32)
        if arr.ndim != 3 or arr.shape[2] < 1:
            raise ValueError(f"semantic map must be H x W x n, got shape {arr.shape}")
        return arr

    @model_validator(mode="after")
    def _check_channels(self):
        if self.registry is not None and self.data.shape[2] != len(self.registry):
            raise ValueError(
                f"semantic map has {self.data.shape[2]} channels but registry "
                f"'{self.registry.name}' has {len(self.registry)} classes"
            )
        return self

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return int(self.data.shape[2])

    def class_indices(self) -> np.ndarray:
        """Per-pixel argmax; ties resolve to the lowest channel."""
        return np.argmax(self.data, axis=2)


class DepthMap(BaseModel):
    """H x W depth in meters plus the mask of pixels carrying a measurement."""
    values: np.ndarray
    valid_mask: Optional[np.ndarray] = Field(None, description="Defaults to all-true (predictions).")
    depth_cap: float = Field(DEFAULT_DEPTH_CAP_M, gt=0.0)

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("values", mode="before")
    @classmethod
    def _coerce_values(cls, v):
        arr = _frozen_array(v, np.float64)
        if arr.ndim != 2:
            raise ValueError(f"depth values must be H x W, got shape {arr.shape}")
        return arr

    @field_validator("valid_mask", mode="before")
    @classmethod
    def _coerce_mask(cls, v):
        if v is None:
            return None
        return _frozen_array(v, bool)

    @model_validator(mode="after")
    def _default_mask(self):
        if self.valid_mask is None:
            object.__setattr__(self, "valid_mask", _frozen_array(np.ones(self.values.shape), bool))
        elif self.valid_mask.shape != self.values.shape:
            raise ValueError(
                f"valid_mask shape {self.valid_mask.shape} differs from values shape {self.values.shape}"
            )
        return self

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def n_valid(self) -> int:
        return int(self.valid_mask.sum())


class Sample(BaseModel):
    """One frame: image, optional labels/depth, camera and identifiers."""
    image: ImageTensor
    semantic: Optional[SemanticLabelMap] = None
    depth: Optional[DepthMap] = None
    intrinsics: CameraIntrinsics
    dataset_id: str
    frame_id: str

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def size(self) -> Tuple[int, int]:
        """(width, height) of the image."""
        return self.image.width, self.image.height

    def with_semantic(self, semantic: Optional[SemanticLabelMap]) -> "Sample":
        return self.model_copy(update={"semantic": semantic})
