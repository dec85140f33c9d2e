"""
Depth-distribution heat maps, their Euclidean distances and accuracy heat maps.

Histogram counts accumulate per frame through associative accumulators;
normalization to percent happens once at the end.
"""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import torch.nn as nn

from src.models.analysis import GLOBAL, PER_ROW, DEFAULT_POWER_EXPONENT, AccuracyHeatMap, DepthHeatMap
from src.models.dataset import DatasetManifest
from src.models.sample import DepthMap, Sample
from src.networks.factory import forward
from src.services.datasets import load_manifest, load_samples
from src.validation.errors import ConfigurationError, DatasetError, DomainError, ShapeMismatchError

logger = logging.getLogger(__name__)

DEFAULT_RANGE_M = 100.0
DEFAULT_BIN_M = 0.2
DEFAULT_ERROR_RANGE_M = (-5.0, 5.0)
DEFAULT_ERROR_BIN_M = 0.1
DEFAULT_DISTANCE_RANGES = [(float(lo), float(lo + 5)) for lo in range(0, 100, 5)]

# absorbs float error of v / bin at exact bin edges
BIN_EPSILON = 1e-9


def uniform_bin_index(values: np.ndarray, low: float, bin_width: float, n_bins: int) -> np.ndarray:
    """Bin of each value on a uniform grid starting at low; out-of-range values clip to the end bins."""
    index = np.floor((values - low) / bin_width + BIN_EPSILON).astype(np.int64)
    return np.clip(index, 0, n_bins - 1)


def _n_bins(extent: float, bin_width: float) -> int:
    n = int(round(extent / bin_width))
    if n < 1:
        raise ConfigurationError(f"bin width {bin_width} exceeds range {extent}", field="bin_m")
    return n


class DepthHeatMapAccumulator:
    """Per-row depth histogram counts; merge() equals accumulating both frame sets."""

    def __init__(self, height: int, range_m: float = DEFAULT_RANGE_M, bin_m: float = DEFAULT_BIN_M):
        self.height = height
        self.range_m = range_m
        self.bin_m = bin_m
        self.n_bins = _n_bins(range_m, bin_m)
        self.counts = np.zeros((height, self.n_bins), dtype=np.int64)

    def add(self, depth: DepthMap) -> "DepthHeatMapAccumulator":
        if depth.height != self.height:
            raise ShapeMismatchError(f"depth map has {depth.height} rows, heat map {self.height}", field="depth")
        rows, _ = np.nonzero(depth.valid_mask)
        bins = uniform_bin_index(depth.values[depth.valid_mask].astype(np.float64), 0.0, self.bin_m, self.n_bins)
        np.add.at(self.counts, (rows, bins), 1)
        return self

    def merge(self, other: "DepthHeatMapAccumulator") -> "DepthHeatMapAccumulator":
        if self.counts.shape != other.counts.shape or self.bin_m != other.bin_m:
            raise ShapeMismatchError(f"cannot merge heat maps {self.counts.shape} and {other.counts.shape}",
                                     field="counts")
        merged = DepthHeatMapAccumulator(self.height, self.range_m, self.bin_m)
        merged.counts = self.counts + other.counts
        return merged

    def heatmap(self, normalization: str = GLOBAL, dataset_id: str = "") -> DepthHeatMap:
        total = int(self.counts.sum())
        if total == 0:
            raise DomainError("no valid depth pixels in the dataset", field="depth")
        row_totals = self.counts.sum(axis=1)
        empty_rows = [int(r) for r in np.flatnonzero(row_totals == 0)]
        if normalization == GLOBAL:
            values = self.counts * (100.0 / total)
        elif normalization == PER_ROW:
            values = np.zeros(self.counts.shape, dtype=np.float64)
            filled = row_totals > 0
            values[filled] = self.counts[filled] * (100.0 / row_totals[filled, None])
        else:
            raise ConfigurationError(f"unknown normalization '{normalization}'", field="normalization")
        if empty_rows:
            logger.debug(f"{len(empty_rows)} heat map rows without valid pixels")
        return DepthHeatMap(
            values=values,
            normalization=normalization,
            range_m=self.range_m,
            bin_m=self.bin_m,
            empty_rows=empty_rows,
            dataset_id=dataset_id,
        )


DepthSource = Union[str, Path, DatasetManifest, Sequence[Sample], Sequence[DepthMap]]


def _depth_maps(source: DepthSource) -> Tuple[List[DepthMap], str]:
    if isinstance(source, (str, Path)):
        source = load_manifest(source)
    if isinstance(source, DatasetManifest):
        if not source.has_depth:
            raise DatasetError(f"manifest lacks depth: '{source.dataset_id}'", field="depth")
        return [s.depth for s in load_samples(source)], source.dataset_id
    maps = [item.depth if isinstance(item, Sample) else item for item in source]
    if any(m is None for m in maps):
        raise DatasetError("sample without depth", field="depth")
    dataset_id = source[0].dataset_id if source and isinstance(source[0], Sample) else ""
    return maps, dataset_id


def depth_heatmap(
    source: DepthSource,
    range_m: float = DEFAULT_RANGE_M,
    bin_m: float = DEFAULT_BIN_M,
    normalization: str = GLOBAL,
) -> DepthHeatMap:
    """Histogram of valid depths per image row over every frame; depths >= range_m land in the last bin."""
    maps, dataset_id = _depth_maps(source)
    if not maps:
        raise DomainError("no frames to build a heat map from", field="depth")
    heights = {m.height for m in maps}
    if len(heights) != 1:
        raise ShapeMismatchError(f"frames differ in height: {sorted(heights)}", field="depth")
    accumulator = DepthHeatMapAccumulator(heights.pop(), range_m, bin_m)
    for m in maps:
        accumulator.add(m)
    return accumulator.heatmap(normalization, dataset_id)


def heatmap_distance(a: DepthHeatMap, b: DepthHeatMap) -> float:
    """Euclidean distance over all cells."""
    if a.values.shape != b.values.shape:
        raise ShapeMismatchError(f"heat maps differ in shape: {a.values.shape} vs {b.values.shape}", field="values")
    if a.normalization != b.normalization or a.bin_m != b.bin_m:
        raise ConfigurationError(
            f"heat maps differ in normalization or bins: {a.normalization}/{a.bin_m} vs {b.normalization}/{b.bin_m}",
            field="normalization",
        )
    return float(np.sqrt(np.sum((a.values - b.values) ** 2)))


def pairwise_heatmap_distances(heatmaps: Sequence[DepthHeatMap]) -> np.ndarray:
    """Symmetric matrix of heatmap_distance with a zero diagonal."""
    n = len(heatmaps)
    distances = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            distances[i, j] = distances[j, i] = heatmap_distance(heatmaps[i], heatmaps[j])
    return distances


class AccuracyAccumulator:
    """Signed-error histogram counts per ground-truth distance range."""

    def __init__(
        self,
        ranges: Optional[Sequence[Tuple[float, float]]] = None,
        error_range: Tuple[float, float] = DEFAULT_ERROR_RANGE_M,
        error_bin: float = DEFAULT_ERROR_BIN_M,
    ):
        self.ranges = [(float(lo), float(hi)) for lo, hi in (ranges or DEFAULT_DISTANCE_RANGES)]
        if any(hi <= lo for lo, hi in self.ranges):
            raise ConfigurationError(f"empty distance range in {self.ranges}", field="ranges")
        self.error_low = float(error_range[0])
        self.error_bin = float(error_bin)
        self.n_bins = _n_bins(error_range[1] - error_range[0], error_bin)
        self.counts = np.zeros((len(self.ranges), self.n_bins), dtype=np.int64)

    @property
    def error_edges(self) -> np.ndarray:
        return self.error_low + np.arange(self.n_bins + 1) * self.error_bin

    def add(self, pred: np.ndarray, gt: np.ndarray) -> "AccuracyAccumulator":
        """pred and gt are the valid pixel vectors of one frame."""
        pred = np.asarray(pred, dtype=np.float64).ravel()
        gt = np.asarray(gt, dtype=np.float64).ravel()
        if pred.shape != gt.shape:
            raise ShapeMismatchError(f"prediction {pred.shape} differs from ground truth {gt.shape}", field="pred")
        bins = uniform_bin_index(pred - gt, self.error_low, self.error_bin, self.n_bins)
        for i, (lo, hi) in enumerate(self.ranges):
            in_range = (gt >= lo) & (gt < hi)
            self.counts[i] += np.bincount(bins[in_range], minlength=self.n_bins)
        return self

    def merge(self, other: "AccuracyAccumulator") -> "AccuracyAccumulator":
        if self.ranges != other.ranges or self.counts.shape != other.counts.shape:
            raise ShapeMismatchError("accuracy accumulators differ in ranges or bins", field="counts")
        merged = AccuracyAccumulator(self.ranges, (self.error_low, self.error_low + self.n_bins * self.error_bin),
                                     self.error_bin)
        merged.counts = self.counts + other.counts
        return merged

    def heatmap(self, power_exponent: float = DEFAULT_POWER_EXPONENT) -> AccuracyHeatMap:
        totals = self.counts.sum(axis=1)
        values = np.zeros(self.counts.shape, dtype=np.float64)
        filled = totals > 0
        values[filled] = self.counts[filled] * (100.0 / totals[filled, None])
        return AccuracyHeatMap(
            ranges=self.ranges,
            error_edges=self.error_edges,
            values=values,
            empty_ranges=[int(i) for i in np.flatnonzero(~filled)],
            power_exponent=power_exponent,
        )


def accuracy_heatmap(
    pred: Union[DepthMap, np.ndarray],
    gt: DepthMap,
    ranges: Optional[Sequence[Tuple[float, float]]] = None,
    error_range: Tuple[float, float] = DEFAULT_ERROR_RANGE_M,
    error_bin: float = DEFAULT_ERROR_BIN_M,
) -> AccuracyHeatMap:
    """Per distance range, percent of valid pixels in each signed-error bin. Empty ranges are flagged."""
    values = pred.values if isinstance(pred, DepthMap) else np.asarray(pred)
    if values.shape != gt.values.shape:
        raise ShapeMismatchError(f"prediction {values.shape} differs from ground truth {gt.values.shape}", field="pred")
    accumulator = AccuracyAccumulator(ranges, error_range, error_bin)
    accumulator.add(values[gt.valid_mask], gt.values[gt.valid_mask])
    return accumulator.heatmap()


def model_accuracy_heatmap(
    model: nn.Module,
    samples: Sequence[Sample],
    ranges: Optional[Sequence[Tuple[float, float]]] = None,
    error_range: Tuple[float, float] = DEFAULT_ERROR_RANGE_M,
    error_bin: float = DEFAULT_ERROR_BIN_M,
) -> AccuracyHeatMap:
    """Accuracy heat map of a depth model accumulated over every frame."""
    accumulator = AccuracyAccumulator(ranges, error_range, error_bin)
    for sample in samples:
        if sample.depth is None:
            raise DatasetError(f"frame {sample.frame_id} lacks depth", field="depth")
        pred = forward(model, sample).depth_map(0)
        mask = sample.depth.valid_mask
        accumulator.add(pred.values[mask], sample.depth.values[mask])
    logger.info(f"Accumulated accuracy heat map over {len(samples)} frames")
    return accumulator.heatmap()
