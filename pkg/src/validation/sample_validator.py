from typing import List, Optional
import numpy as np

from src.models.sample import Sample, ImageTensor, SemanticLabelMap, DepthMap


class SampleValidator:
    """Centralized invariant checks for prepared samples. Reports, never raises."""

    @classmethod
    def validate(cls, sample: Sample) -> List[str]:
        violations: List[str] = []
        violations += cls._validate_image(sample.image)
        if sample.semantic is not None:
            violations += cls._validate_size("semantic", sample.semantic.height, sample.semantic.width, sample.image)
            violations += cls._validate_semantic(sample.semantic)
        if sample.depth is not None:
            violations += cls._validate_size("depth", sample.depth.height, sample.depth.width, sample.image)
            violations += cls._validate_depth(sample.depth)
        return violations

    @classmethod
    def _validate_image(cls, image: ImageTensor) -> List[str]:
        data = image.data
        if not np.all(np.isfinite(data)):
            return ["image: non-finite values"]
        if data.min() < 0.0 or data.max() > 1.0:
            return ["image: values outside [0, 1]"]
        return []

    @classmethod
    def _validate_size(cls, field: str, height: int, width: int, image: ImageTensor) -> List[str]:
        if (height, width) != (image.height, image.width):
            return [f"{field}: size {height}x{width} differs from image {image.height}x{image.width}"]
        return []

    @classmethod
    def _validate_semantic(cls, semantic: SemanticLabelMap) -> List[str]:
        data = semantic.data
        binary = np.all((data == 0.0) | (data == 1.0), axis=2)
        one_hot = binary & (data.sum(axis=2) == 1.0)
        bad = cls._first_false(one_hot)
        if bad is not None:
            return [f"semantic: not one-hot at ({bad[0]}, {bad[1]})"]
        return []

    @classmethod
    def _validate_depth(cls, depth: DepthMap) -> List[str]:
        violations = []
        valid = depth.valid_mask
        values = depth.values[valid]
        if not np.all(np.isfinite(values)):
            violations.append("depth: non-finite valid value")
            values = values[np.isfinite(values)]
        if np.any(values <= 0.0):
            violations.append("depth: non-positive valid value")
        if np.any(values > depth.depth_cap):
            violations.append("depth: exceeds cap")
        return violations

    @staticmethod
    def _first_false(mask: np.ndarray) -> Optional[tuple]:
        rows, cols = np.nonzero(~mask)
        if rows.size == 0:
            return None
        return int(rows[0]), int(cols[0])


def validate_sample(sample: Sample) -> List[str]:
    """Empty list iff every type invariant of the sample holds."""
    return SampleValidator.validate(sample)
