import math

import numpy as np
import pytest

from src.models.analysis import PER_ROW
from src.models.network import ModelSpec, Variant
from src.models.sample import DepthMap
from src.networks.factory import build
from src.services.analysis import (
    AccuracyAccumulator, DepthHeatMapAccumulator, accuracy_heatmap, depth_heatmap, heatmap_distance,
    model_accuracy_heatmap, pairwise_heatmap_distances, uniform_bin_index,
)
from src.services.datasets import load_manifest
from src.services.toy_scenes import generate_toy_dataset
from src.validation.errors import ConfigurationError, DatasetError, DomainError, ShapeMismatchError


def test_uniform_bins_at_exact_edges():
    values = np.array([0.0, 0.2, 0.6, 99.8, 100.0, 250.0, -1.0])
    assert uniform_bin_index(values, 0.0, 0.2, 500).tolist() == [0, 1, 3, 499, 499, 499, 0]


def test_constant_depth_fills_one_column():
    heatmap = depth_heatmap([DepthMap(values=np.full((4, 3), 10.0))])
    assert heatmap.shape == (4, 500)
    np.testing.assert_allclose(heatmap.values[:, 50], 25.0)
    assert heatmap.values.sum() == pytest.approx(100.0)
    assert np.count_nonzero(heatmap.values) == 4


def test_two_depths_split_evenly():
    heatmap = depth_heatmap([DepthMap(values=np.array([[1.0, 3.0]]))], normalization=PER_ROW)
    assert heatmap.values[0, 5] == pytest.approx(50.0)
    assert heatmap.values[0, 15] == pytest.approx(50.0)
    assert heatmap.bin_edges()[5] == pytest.approx(1.0)


def test_per_row_normalization_flags_empty_rows():
    mask = np.ones((3, 2), dtype=bool)
    mask[1] = False
    depth = DepthMap(values=np.array([[5.0, 5.0], [0.0, 0.0], [5.0, 50.0]]), valid_mask=mask)
    heatmap = depth_heatmap([depth], normalization=PER_ROW)
    assert heatmap.empty_rows == [1]
    np.testing.assert_allclose(heatmap.values.sum(axis=1), [100.0, 0.0, 100.0])
    global_map = depth_heatmap([depth])
    assert global_map.values.sum() == pytest.approx(100.0)
    assert global_map.values[0, 25] == pytest.approx(50.0)


def test_far_depths_land_in_last_bin():
    heatmap = depth_heatmap([DepthMap(values=np.array([[150.0]]), depth_cap=200.0)])
    assert heatmap.values[0, -1] == pytest.approx(100.0)


def test_toy_dataset_heatmap(toy_manifest):
    heatmap = depth_heatmap(toy_manifest, normalization=PER_ROW)
    assert heatmap.dataset_id == "toy"
    assert heatmap.shape == (64, 500)
    # every row below the horizon sees ground or a box
    assert set(heatmap.empty_rows) <= set(range(0, 33))
    for r, total in enumerate(heatmap.values.sum(axis=1)):
        assert total == pytest.approx(0.0 if r in heatmap.empty_rows else 100.0)


def test_heatmap_errors(toy_manifest):
    with pytest.raises(DomainError):
        depth_heatmap([DepthMap(values=np.ones((2, 2)), valid_mask=np.zeros((2, 2), dtype=bool))])
    with pytest.raises(ShapeMismatchError):
        depth_heatmap([DepthMap(values=np.ones((2, 2))), DepthMap(values=np.ones((3, 2)))])
    with pytest.raises(ConfigurationError):
        depth_heatmap([DepthMap(values=np.ones((2, 2)))], normalization="log")

    depth_dir = toy_manifest.parent / "depth"
    for path in depth_dir.iterdir():
        path.unlink()
    depth_dir.rmdir()
    with pytest.raises(DatasetError) as exc_info:
        depth_heatmap(load_manifest(toy_manifest))
    assert "manifest lacks depth" in str(exc_info.value)


def test_accumulator_merge_equals_joint_accumulation():
    rng = np.random.default_rng(8)
    maps = [DepthMap(values=rng.uniform(1, 120, size=(6, 5))) for _ in range(4)]
    joint = DepthHeatMapAccumulator(6)
    for m in maps:
        joint.add(m)
    left, right = DepthHeatMapAccumulator(6), DepthHeatMapAccumulator(6)
    for m in maps[:1]:
        left.add(m)
    for m in maps[1:]:
        right.add(m)
    np.testing.assert_array_equal(left.merge(right).counts, joint.counts)


def _one_cell(depth_m):
    return depth_heatmap([DepthMap(values=np.array([[depth_m]]))])


def test_distance_of_disjoint_single_cells():
    assert heatmap_distance(_one_cell(1.0), _one_cell(30.0)) == pytest.approx(math.sqrt(100 ** 2 + 100 ** 2))


def test_distance_axioms():
    rng = np.random.default_rng(9)
    for _ in range(20):
        h = int(rng.integers(1, 7))
        maps = [depth_heatmap([DepthMap(values=rng.uniform(0, 120, size=(h, 4)))]) for _ in range(3)]
        d = pairwise_heatmap_distances(maps)
        np.testing.assert_allclose(np.diag(d), 0.0)
        np.testing.assert_allclose(d, d.T)
        assert (d >= 0).all()
        assert d[0, 2] <= d[0, 1] + d[1, 2] + 1e-12
        assert heatmap_distance(maps[0], maps[0]) == 0.0
        if not np.array_equal(maps[0].values, maps[1].values):
            assert heatmap_distance(maps[0], maps[1]) > 0.0


@pytest.mark.parametrize("seed", range(10))
def test_normalization_sums_on_toy_datasets(seed, common_registry):
    samples = generate_toy_dataset(2, 32, common_registry, seed=seed)
    global_map = depth_heatmap(samples)
    assert global_map.values.sum() == pytest.approx(100.0, abs=1e-6)

    per_row = depth_heatmap(samples, normalization=PER_ROW)
    for r, s in enumerate(per_row.values.sum(axis=1)):
        assert s == pytest.approx(0.0 if r in per_row.empty_rows else 100.0, abs=1e-6)
    assert len(per_row.empty_rows) < per_row.values.shape[0]


def test_normalization_sums_with_empty_rows():
    rng = np.random.default_rng(12)
    for _ in range(20):
        h, w = (int(x) for x in rng.integers(2, 9, size=2))
        valid = rng.random((h, w)) < 0.7
        valid[rng.integers(h)] = False
        valid[rng.integers(h), rng.integers(w)] = True
        maps = [DepthMap(values=rng.uniform(0.5, 150.0, size=(h, w)), valid_mask=valid)]
        assert depth_heatmap(maps).values.sum() == pytest.approx(100.0, abs=1e-6)
        per_row = depth_heatmap(maps, normalization=PER_ROW)
        assert per_row.empty_rows == [int(r) for r in np.flatnonzero(~valid.any(axis=1))]
        for r, s in enumerate(per_row.values.sum(axis=1)):
            assert s == pytest.approx(0.0 if r in per_row.empty_rows else 100.0, abs=1e-6)


def test_distance_rejects_incomparable_maps():
    a = _one_cell(1.0)
    with pytest.raises(ShapeMismatchError):
        heatmap_distance(a, depth_heatmap([DepthMap(values=np.ones((2, 1)))]))
    with pytest.raises(ConfigurationError):
        heatmap_distance(a, depth_heatmap([DepthMap(values=np.array([[1.0]]))], normalization=PER_ROW))


def test_accuracy_shift_lands_in_one_bin():
    rng = np.random.default_rng(10)
    gt = DepthMap(values=rng.uniform(1.0, 99.0, size=(8, 8)))
    heatmap = accuracy_heatmap(DepthMap(values=gt.values + 1.05), gt)
    assert heatmap.values.shape == (20, 100)
    filled = [i for i in range(20) if i not in heatmap.empty_ranges]
    assert filled
    for i in filled:
        assert heatmap.values[i, 60] == pytest.approx(100.0)
    assert heatmap.error_centers()[60] == pytest.approx(1.05)


def test_accuracy_out_of_range_errors_clip_to_end_bins():
    gt = DepthMap(values=np.array([[10.0, 10.0]]))
    heatmap = accuracy_heatmap(np.array([[30.0, -10.0]]), gt)
    row = heatmap.values[2]
    assert row[0] == pytest.approx(50.0) and row[-1] == pytest.approx(50.0)
    assert heatmap.empty_ranges == [i for i in range(20) if i != 2]


def test_accuracy_ignores_invalid_pixels():
    gt = DepthMap(values=np.array([[10.0, 0.0]]), valid_mask=np.array([[True, False]]))
    heatmap = accuracy_heatmap(np.array([[10.0, 500.0]]), gt)
    assert heatmap.values[2, 50] == pytest.approx(100.0)


def test_accuracy_accumulator_merge_and_errors():
    a = AccuracyAccumulator().add(np.array([1.0]), np.array([2.0]))
    b = AccuracyAccumulator().add(np.array([7.0]), np.array([6.0]))
    merged = a.merge(b)
    assert merged.counts.sum() == 2
    assert merged.counts[0, 40] == 1 and merged.counts[1, 60] == 1
    with pytest.raises(ConfigurationError):
        AccuracyAccumulator(ranges=[(5.0, 5.0)])
    with pytest.raises(ShapeMismatchError):
        a.add(np.ones(2), np.ones(3))


def test_model_accuracy_heatmap_rows_are_percentages(toy_samples):
    model = build(ModelSpec(variant=Variant.M20, input_size=(64, 64), width_scale=0.1))
    heatmap = model_accuracy_heatmap(model, toy_samples[:2])
    for i, total in enumerate(heatmap.values.sum(axis=1)):
        assert total == pytest.approx(0.0 if i in heatmap.empty_ranges else 100.0)
    assert len(heatmap.empty_ranges) < 20
