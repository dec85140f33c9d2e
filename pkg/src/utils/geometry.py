"""
Pinhole field-of-view helpers. Angles are degrees in every public interface.
"""
import math

from src.validation.errors import DomainError


def afov_of(dim_px: float, focal_length_px: float) -> float:
    """Angular field of view 2*atan(dim / 2f) in degrees."""
    if dim_px <= 0:
        raise DomainError(f"dimension must be positive, got {dim_px}", field="dim_px")
    if focal_length_px <= 0:
        raise DomainError(f"focal length must be positive, got {focal_length_px}", field="focal_length_px")
    return math.degrees(2.0 * math.atan(dim_px / (2.0 * focal_length_px)))


def dim_for_afov(afov_deg: float, focal_length_px: float) -> float:
    """Sensor extent (pixels, unrounded) that yields `afov_deg` at the given focal length."""
    if not 0.0 < afov_deg < 180.0:
        raise DomainError(f"AFOV must lie in (0, 180) degrees, got {afov_deg}", field="afov")
    if focal_length_px <= 0:
        raise DomainError(f"focal length must be positive, got {focal_length_px}", field="focal_length_px")
    return 2.0 * focal_length_px * math.tan(math.radians(afov_deg) / 2.0)
