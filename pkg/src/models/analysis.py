from typing import List, Literal, Tuple
import numpy as np
from pydantic import BaseModel, Field, ConfigDict, model_validator

GLOBAL = "global"
PER_ROW = "per_row"

# Display exponent of the power-norm colour mapping.
DEFAULT_POWER_EXPONENT = 0.5

PERCENT_TOLERANCE = 1e-6


class DepthHeatMap(BaseModel):
    """Per-image-row histograms of valid depth values, in percent."""
    values: np.ndarray = Field(..., description="rows x bins percentages.")
    normalization: Literal["global", "per_row"] = GLOBAL
    range_m: float = Field(100.0, gt=0.0)
    bin_m: float = Field(0.2, gt=0.0)
    empty_rows: List[int] = Field(default_factory=list, description="Rows without any valid pixel.")
    dataset_id: str = ""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _check_sums(self):
        if self.values.ndim != 2:
            raise ValueError(f"heat map values must be 2-D, got shape {self.values.shape}")
        if self.normalization == GLOBAL:
            total = float(self.values.sum())
            if abs(total - 100.0) > PERCENT_TOLERANCE:
                raise ValueError(f"globally normalized heat map sums to {total}")
        else:
            sums = self.values.sum(axis=1)
            for r, s in enumerate(sums):
                expected = 0.0 if r in self.empty_rows else 100.0
                if abs(s - expected) > PERCENT_TOLERANCE:
                    raise ValueError(f"row {r} sums to {s}, expected {expected}")
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def bin_edges(self) -> np.ndarray:
        return np.arange(self.values.shape[1] + 1) * self.bin_m


class AccuracyHeatMap(BaseModel):
    """Error histograms (prediction minus ground truth) per ground-truth distance range, in percent."""
    ranges: List[Tuple[float, float]] = Field(..., description="[low, high) ground-truth distance ranges, meters.")
    error_edges: np.ndarray = Field(..., description="Bin edges of the signed error, meters.")
    values: np.ndarray = Field(..., description="ranges x error bins percentages.")
    empty_ranges: List[int] = Field(default_factory=list)
    power_exponent: float = Field(DEFAULT_POWER_EXPONENT, gt=0.0, description="Display only.")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def _check_rows(self):
        expected_shape = (len(self.ranges), len(self.error_edges) - 1)
        if self.values.shape != expected_shape:
            raise ValueError(f"values shape {self.values.shape}, expected {expected_shape}")
        for i, s in enumerate(self.values.sum(axis=1)):
            expected = 0.0 if i in self.empty_ranges else 100.0
            if abs(s - expected) > PERCENT_TOLERANCE:
                raise ValueError(f"range {self.ranges[i]} sums to {s}, expected {expected}")
        return self

    def error_centers(self) -> np.ndarray:
        return (self.error_edges[:-1] + self.error_edges[1:]) / 2.0
