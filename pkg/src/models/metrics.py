from typing import List
from pydantic import BaseModel, Field, ConfigDict, model_validator

# Column order of the metric CSV row; error metrics first, then accuracies.
METRIC_FIELDS = ["mape", "mspe", "rmse", "rmse_log", "log10", "delta1", "delta2", "delta3", "silog"]

# Metrics where a larger value is better.
HIGHER_IS_BETTER = {"delta1", "delta2", "delta3", "mean_iou"}


class MetricReport(BaseModel):
    """Depth metrics over the valid pixels of one frame or a whole dataset."""
    mape: float = Field(..., description="Mean absolute percentage error, percent.")
    mspe: float = Field(..., description="Mean squared percentage error, percent.")
    rmse: float = Field(..., description="Root mean squared error, meters.")
    rmse_log: float = Field(..., description="RMSE of natural-log depths.")
    log10: float = Field(..., description="Mean absolute base-10 log difference.")
    delta1: float = Field(..., ge=0.0, le=1.0)
    delta2: float = Field(..., ge=0.0, le=1.0)
    delta3: float = Field(..., ge=0.0, le=1.0)
    silog: float = Field(..., description="Scale-invariant log error (variance of log differences).")
    n_valid_pixels: int = Field(..., ge=0)
    n_clamped_pixels: int = Field(0, ge=0, description="Valid pixels whose prediction was clamped before log metrics.")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "mape": 6.403, "mspe": 0.9, "rmse": 3.1, "rmse_log": 0.12, "log10": 0.03,
                "delta1": 0.95, "delta2": 0.98, "delta3": 0.99, "silog": 0.01,
                "n_valid_pixels": 428032, "n_clamped_pixels": 0,
            }
        },
    )

    @model_validator(mode="after")
    def _check_deltas(self):
        if not self.delta1 <= self.delta2 <= self.delta3:
            raise ValueError(f"delta thresholds not monotone: {self.delta1}, {self.delta2}, {self.delta3}")
        return self

    @staticmethod
    def csv_header() -> List[str]:
        return METRIC_FIELDS + ["n_valid_pixels", "n_clamped_pixels"]

    def csv_row(self) -> List[str]:
        return [repr(float(getattr(self, name))) for name in METRIC_FIELDS] + [
            str(self.n_valid_pixels), str(self.n_clamped_pixels)
        ]

    def metric_items(self):
        return [(name, float(getattr(self, name))) for name in METRIC_FIELDS]


class IoUReport(BaseModel):
    """Per-class intersection over union of an argmax segmentation."""
    class_names: List[str]
    per_class: List[float]
    absent: List[bool] = Field(..., description="Class absent from both maps; its IoU is reported as 1.0.")
    mean_iou: float = Field(..., description="Mean over classes present in either map.")
    n_pixels: int = Field(0, ge=0)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_lengths(self):
        if not len(self.class_names) == len(self.per_class) == len(self.absent):
            raise ValueError("class_names, per_class and absent must have equal length")
        return self

    def metric_items(self):
        items = [("mean_iou", float(self.mean_iou))]
        items += [(f"iou:{name}", float(v)) for name, v, gone in zip(self.class_names, self.per_class, self.absent) if not gone]
        return items

