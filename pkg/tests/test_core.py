import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.models.registry import ClassRegistry, UNLABELED
from src.models.sample import DepthMap, ImageTensor, Sample, SemanticLabelMap, CameraIntrinsics
from src.utils.geometry import afov_of, dim_for_afov
from src.validation.errors import DomainError
from src.validation.sample_validator import validate_sample


@pytest.mark.parametrize("dim,focal,expected", [
    (1216, 880.0, 69.28),
    (290, 725.0, 22.62),
    (352, 880.0, 22.62),
])
def test_afov_of_matches_table(dim, focal, expected):
    assert afov_of(dim, focal) == pytest.approx(expected, abs=0.005)


def test_afov_of_square_case():
    assert afov_of(2 * 500.0, 500.0) == pytest.approx(90.0, abs=1e-12)


@pytest.mark.parametrize("dim,focal,field", [
    (0, 880.0, "dim_px"),
    (-3, 880.0, "dim_px"),
    (100, 0.0, "focal_length_px"),
])
def test_afov_of_rejects_non_positive(dim, focal, field):
    with pytest.raises(DomainError) as exc_info:
        afov_of(dim, focal)
    assert exc_info.value.field == field


def test_afov_monotonicity_and_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(100):
        dim, focal = rng.uniform(1, 4000), rng.uniform(1, 4000)
        assert afov_of(dim * 1.01, focal) > afov_of(dim, focal)
        assert afov_of(dim, focal * 1.01) < afov_of(dim, focal)
        recovered = dim_for_afov(afov_of(dim, focal), focal)
        assert math.isclose(recovered, dim, rel_tol=1e-9)


def test_registry_invariants(common_registry):
    assert len(common_registry) == 11
    assert common_registry.names[0] == UNLABELED
    assert common_registry.rgb_codes[common_registry.index_of("Road")] == (128, 64, 128)
    with pytest.raises(KeyError):
        common_registry.index_of("Spaceship")


@pytest.mark.parametrize("pairs", [
    [("Road", (128, 64, 128))],
    [(UNLABELED, (0, 0, 0)), ("Road", (1, 1, 1)), ("Road", (2, 2, 2))],
    [(UNLABELED, (0, 0, 0)), ("Road", (1, 1, 1)), ("Car", (1, 1, 1))],
])
def test_registry_rejects_broken_tables(pairs):
    with pytest.raises(ValidationError):
        ClassRegistry.from_pairs("broken", pairs)


def test_validate_toy_sample_is_clean(toy_samples):
    for sample in toy_samples:
        assert validate_sample(sample) == []


def _small_sample(semantic=None, depth=None):
    return Sample(
        image=ImageTensor(data=np.full((4, 4, 3), 0.5)),
        semantic=semantic,
        depth=depth,
        intrinsics=CameraIntrinsics(focal_length_px=4.0, width_px=4, height_px=4),
        dataset_id="unit",
        frame_id="0",
    )


def test_validate_reports_non_one_hot():
    data = np.zeros((4, 4, 2))
    data[..., 0] = 1.0
    data[1, 2, 1] = 1.0
    violations = validate_sample(_small_sample(semantic=SemanticLabelMap(data=data)))
    assert violations == ["semantic: not one-hot at (1, 2)"]


def test_validate_reports_depth_over_cap():
    values = np.full((4, 4), 10.0)
    values[0, 0] = 150.0
    violations = validate_sample(_small_sample(depth=DepthMap(values=values, depth_cap=100.0)))
    assert violations == ["depth: exceeds cap"]


def test_depth_map_defaults_to_all_valid():
    depth = DepthMap(values=np.ones((3, 5)))
    assert depth.n_valid == 15
    assert not depth.values.flags.writeable
