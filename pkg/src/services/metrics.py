"""
Mask-aware depth metrics, IoU family and the two training losses.

Depth metrics run in float64 over the ground-truth valid mask. MAPE, MSPE and
RMSE use raw predictions; log metrics and delta thresholds use predictions
clamped to PRED_CLAMP_M, and the clamp count is reported.
"""
import logging
from typing import Optional, Sequence

import numpy as np
import torch

from src.models.metrics import IoUReport, MetricReport
from src.models.sample import DepthMap, SemanticLabelMap
from src.validation.errors import DomainError, ShapeMismatchError

logger = logging.getLogger(__name__)

PRED_CLAMP_M = 1e-3
DELTA_BASE = 1.25


def _check_vectors(pred: np.ndarray, gt: np.ndarray) -> None:
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"prediction shape {pred.shape} differs from ground truth {gt.shape}", field="pred")
    if gt.size == 0:
        raise DomainError("no valid ground-truth pixels", field="gt")
    if np.any(gt <= 0.0):
        raise DomainError("non-positive ground-truth depth inside the valid mask", field="gt")


class MetricAccumulator:
    """
    Running sums of every metric term. Merging two accumulators equals
    accumulating the concatenated pixel vectors, so datasets aggregate
    pixel-weighted in any frame order.
    """

    _TERMS = ("abs_rel", "sq_rel", "sq", "log_sq", "abs_log10", "d", "delta1", "delta2", "delta3")

    def __init__(self):
        self.n = 0
        self.n_clamped = 0
        self.sums = {term: 0.0 for term in self._TERMS}

    def add(self, pred: np.ndarray, gt: np.ndarray) -> "MetricAccumulator":
        y = np.asarray(pred, dtype=np.float64).ravel()
        y_star = np.asarray(gt, dtype=np.float64).ravel()
        _check_vectors(y, y_star)

        err = y - y_star
        y_clamped = np.maximum(y, PRED_CLAMP_M)
        d = np.log(y_clamped) - np.log(y_star)
        ratio = np.maximum(y_clamped / y_star, y_star / y_clamped)

        self.n += y.size
        self.n_clamped += int(np.count_nonzero(y < PRED_CLAMP_M))
        self.sums["abs_rel"] += float(np.sum(np.abs(err) / y_star))
        self.sums["sq_rel"] += float(np.sum(err ** 2 / y_star))
        self.sums["sq"] += float(np.sum(err ** 2))
        self.sums["log_sq"] += float(np.sum(d ** 2))
        self.sums["abs_log10"] += float(np.sum(np.abs(np.log10(y_clamped) - np.log10(y_star))))
        self.sums["d"] += float(np.sum(d))
        for i in (1, 2, 3):
            self.sums[f"delta{i}"] += float(np.count_nonzero(ratio < DELTA_BASE ** i))
        return self

    def merge(self, other: "MetricAccumulator") -> "MetricAccumulator":
        merged = MetricAccumulator()
        merged.n = self.n + other.n
        merged.n_clamped = self.n_clamped + other.n_clamped
        merged.sums = {term: self.sums[term] + other.sums[term] for term in self._TERMS}
        return merged

    def report(self) -> MetricReport:
        if self.n == 0:
            raise DomainError("no valid pixels accumulated", field="gt")
        n = float(self.n)
        s = self.sums
        mean_d = s["d"] / n
        return MetricReport(
            mape=100.0 * s["abs_rel"] / n,
            mspe=100.0 * s["sq_rel"] / n,
            rmse=float(np.sqrt(s["sq"] / n)),
            rmse_log=float(np.sqrt(s["log_sq"] / n)),
            log10=s["abs_log10"] / n,
            delta1=s["delta1"] / n,
            delta2=s["delta2"] / n,
            delta3=s["delta3"] / n,
            silog=max(s["log_sq"] / n - mean_d * mean_d, 0.0),
            n_valid_pixels=self.n,
            n_clamped_pixels=self.n_clamped,
        )


def depth_metrics_from_vectors(pred: np.ndarray, gt: np.ndarray) -> MetricReport:
    return MetricAccumulator().add(pred, gt).report()


def depth_metrics(pred: DepthMap, gt: DepthMap) -> MetricReport:
    """Every depth metric over gt.valid_mask."""
    if pred.values.shape != gt.values.shape:
        raise ShapeMismatchError(
            f"prediction {pred.height}x{pred.width} differs from ground truth {gt.height}x{gt.width}", field="pred"
        )
    mask = gt.valid_mask
    report = depth_metrics_from_vectors(pred.values[mask], gt.values[mask])
    if report.n_clamped_pixels:
        logger.debug(f"{report.n_clamped_pixels} predictions clamped to {PRED_CLAMP_M} m for log metrics")
    return report


def mape_loss(pred: torch.Tensor, gt: torch.Tensor, valid: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    100 * mean(|y - y*| / y*) over valid pixels. Invalid pixels are excluded by
    indexing, so their values never reach the result or its gradient.
    """
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"prediction shape {tuple(pred.shape)} differs from {tuple(gt.shape)}", field="pred")
    if valid is None:
        valid = torch.ones_like(gt, dtype=torch.bool)
    y = pred[valid]
    y_star = gt[valid]
    if y_star.numel() == 0:
        raise DomainError("no valid ground-truth pixels", field="gt")
    if bool((y_star <= 0).any()):
        raise DomainError("non-positive ground-truth depth inside the valid mask", field="gt")
    return 100.0 * torch.mean(torch.abs(y - y_star) / y_star)


def iou_loss(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """
    1 - mean soft IoU over channels of N x C x H x W maps. Soft IoU of a
    channel is sum(p*g) / sum(p + g - p*g); a channel with empty union counts as 1.
    """
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"prediction shape {tuple(pred.shape)} differs from {tuple(gt.shape)}", field="pred")
    if bool((pred < 0).any()) or bool((pred > 1).any()):
        raise DomainError("soft predictions must lie in [0, 1]", field="pred")
    dims = [0] + list(range(2, pred.dim()))
    product = pred * gt
    intersection = product.sum(dim=dims)
    union = (pred + gt - product).sum(dim=dims)
    iou = torch.where(union > 0, intersection / union.clamp_min(1e-12), torch.ones_like(union))
    return 1.0 - iou.mean()


class IoUAccumulator:
    """Per-class intersection/union pixel counts, summed over frames."""

    def __init__(self, n_classes: int, class_names: Optional[Sequence[str]] = None):
        self.n_classes = n_classes
        self.class_names = list(class_names) if class_names is not None else [str(i) for i in range(n_classes)]
        self.intersection = np.zeros(n_classes, dtype=np.int64)
        self.union = np.zeros(n_classes, dtype=np.int64)
        self.n_pixels = 0

    def add(self, pred_indices: np.ndarray, gt_indices: np.ndarray) -> "IoUAccumulator":
        if pred_indices.shape != gt_indices.shape:
            raise ShapeMismatchError(
                f"prediction shape {pred_indices.shape} differs from ground truth {gt_indices.shape}", field="pred"
            )
        pred_indices = pred_indices.ravel()
        gt_indices = gt_indices.ravel()
        both = np.bincount(pred_indices[pred_indices == gt_indices], minlength=self.n_classes)[: self.n_classes]
        self.intersection += both
        pred_counts = np.bincount(pred_indices, minlength=self.n_classes)[: self.n_classes]
        gt_counts = np.bincount(gt_indices, minlength=self.n_classes)[: self.n_classes]
        self.union += pred_counts + gt_counts - both
        self.n_pixels += pred_indices.size
        return self

    def report(self) -> IoUReport:
        absent = self.union == 0
        per_class = np.where(absent, 1.0, self.intersection / np.maximum(self.union, 1))
        present = ~absent
        mean_iou = float(per_class[present].mean()) if present.any() else 1.0
        return IoUReport(
            class_names=self.class_names,
            per_class=[float(v) for v in per_class],
            absent=[bool(a) for a in absent],
            mean_iou=mean_iou,
            n_pixels=self.n_pixels,
        )


def iou_per_class(pred: SemanticLabelMap, gt: SemanticLabelMap) -> IoUReport:
    """IoU per class of the argmax-binarized prediction against the ground truth."""
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ShapeMismatchError(
            f"prediction {pred.height}x{pred.width} differs from ground truth {gt.height}x{gt.width}", field="pred"
        )
    if pred.channels != gt.channels:
        raise ShapeMismatchError(f"prediction has {pred.channels} channels, ground truth {gt.channels}", field="pred")
    names = gt.registry.names if gt.registry is not None else None
    return IoUAccumulator(gt.channels, names).add(pred.class_indices(), gt.class_indices()).report()
