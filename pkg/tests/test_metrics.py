import numpy as np
import pytest
import torch

from src.models.metrics import METRIC_FIELDS
from src.models.sample import DepthMap, SemanticLabelMap
from src.services.metrics import (
    PRED_CLAMP_M, IoUAccumulator, MetricAccumulator, depth_metrics, depth_metrics_from_vectors,
    iou_loss, iou_per_class, mape_loss,
)
from src.validation.errors import DomainError, ShapeMismatchError


def _brute_force(y, y_star):
    """Per-pixel loop over every metric definition."""
    n = len(y)
    abs_rel = sq_rel = sq = log_sq = abs_log10 = d_sum = 0.0
    deltas = [0, 0, 0]
    for p, g in zip(y, y_star):
        pc = max(p, PRED_CLAMP_M)
        abs_rel += abs(p - g) / g
        sq_rel += (p - g) ** 2 / g
        sq += (p - g) ** 2
        d = np.log(pc) - np.log(g)
        log_sq += d ** 2
        d_sum += d
        abs_log10 += abs(np.log10(pc) - np.log10(g))
        ratio = max(pc / g, g / pc)
        for i in range(3):
            deltas[i] += ratio < 1.25 ** (i + 1)
    return {
        "mape": 100 * abs_rel / n,
        "mspe": 100 * sq_rel / n,
        "rmse": np.sqrt(sq / n),
        "rmse_log": np.sqrt(log_sq / n),
        "log10": abs_log10 / n,
        "delta1": deltas[0] / n,
        "delta2": deltas[1] / n,
        "delta3": deltas[2] / n,
        "silog": log_sq / n - (d_sum / n) ** 2,
    }


def test_metrics_match_brute_force():
    rng = np.random.default_rng(1)
    gt = rng.uniform(1.0, 80.0, size=200)
    pred = gt * rng.uniform(0.5, 1.6, size=200)
    report = depth_metrics_from_vectors(pred, gt)
    oracle = _brute_force(pred, gt)
    for name in METRIC_FIELDS:
        assert getattr(report, name) == pytest.approx(oracle[name], rel=1e-9, abs=1e-12), name
    assert report.n_valid_pixels == 200


def test_random_maps_match_brute_force():
    rng = np.random.default_rng(11)
    for trial in range(1000):
        h, w = rng.integers(1, 9, size=2)
        gt_values = rng.uniform(0.5, 90.0, size=(h, w))
        pred_values = gt_values * rng.uniform(0.3, 2.0, size=(h, w))
        # some predictions below the log clamp
        pred_values[rng.random((h, w)) < 0.05] = 0.0
        valid = rng.random((h, w)) < 0.8
        valid[rng.integers(h), rng.integers(w)] = True
        gt_values[~valid] = 0.0

        report = depth_metrics(DepthMap(values=pred_values), DepthMap(values=gt_values, valid_mask=valid))
        oracle = _brute_force(pred_values[valid], gt_values[valid])
        oracle["silog"] = max(oracle["silog"], 0.0)
        for name in METRIC_FIELDS:
            assert getattr(report, name) == pytest.approx(oracle[name], rel=1e-9, abs=1e-12), (trial, name)
        assert report.n_valid_pixels == int(valid.sum())


def test_two_pixel_example():
    report = depth_metrics_from_vectors(np.array([2.0, 4.0]), np.array([1.0, 4.0]))
    assert report.mape == pytest.approx(50.0)
    assert report.mspe == pytest.approx(50.0)
    assert report.delta1 == pytest.approx(0.5)
    assert report.delta3 == pytest.approx(0.5)
    assert report.rmse == pytest.approx(np.sqrt(0.5))


def test_perfect_prediction():
    gt = np.array([1.0, 5.0, 50.0])
    report = depth_metrics_from_vectors(gt, gt)
    assert report.mape == 0.0 and report.rmse == 0.0 and report.silog == pytest.approx(0.0)
    assert report.delta1 == 1.0


def test_silog_is_scale_invariant():
    rng = np.random.default_rng(2)
    for _ in range(100):
        gt = rng.uniform(1.0, 80.0, size=(8, 8))
        pred = gt * rng.uniform(0.5, 1.5, size=(8, 8))
        c = rng.uniform(0.1, 10.0)
        base = depth_metrics(DepthMap(values=pred), DepthMap(values=gt)).silog
        scaled = depth_metrics(DepthMap(values=c * pred), DepthMap(values=gt)).silog
        assert scaled == pytest.approx(base, abs=1e-9)
    assert depth_metrics_from_vectors(gt.ravel() * 3.0, gt.ravel()).silog == pytest.approx(0.0, abs=1e-12)


def test_depth_map_keeps_double_precision():
    depth = DepthMap(values=np.full((2, 2), 1.0 + 1e-12, dtype=np.float64))
    assert depth.values.dtype == np.float64
    assert depth.values[0, 0] != 1.0
    assert DepthMap(values=np.ones((1, 1), dtype=np.float32)).values.dtype == np.float64


def test_clamped_predictions_are_counted():
    report = depth_metrics_from_vectors(np.array([0.0, -1.0, 5.0]), np.array([2.0, 2.0, 5.0]))
    assert report.n_clamped_pixels == 2
    assert np.isfinite(report.rmse_log)
    assert report.mape == pytest.approx(100 * (1.0 + 1.5 + 0.0) / 3)


def test_depth_metrics_use_valid_mask_only():
    gt = DepthMap(values=np.array([[1.0, 4.0], [0.0, 9.0]]), valid_mask=np.array([[True, True], [False, False]]))
    pred = DepthMap(values=np.array([[2.0, 4.0], [123.0, -5.0]]))
    report = depth_metrics(pred, gt)
    assert report.n_valid_pixels == 2
    assert report.mape == pytest.approx(50.0)


def test_depth_metrics_errors():
    gt = DepthMap(values=np.ones((2, 2)), valid_mask=np.zeros((2, 2), dtype=bool))
    with pytest.raises(DomainError) as exc_info:
        depth_metrics(DepthMap(values=np.ones((2, 2))), gt)
    assert exc_info.value.field == "gt"
    with pytest.raises(ShapeMismatchError):
        depth_metrics(DepthMap(values=np.ones((2, 3))), DepthMap(values=np.ones((2, 2))))
    with pytest.raises(DomainError):
        depth_metrics_from_vectors(np.array([1.0]), np.array([0.0]))


def test_accumulator_merge_equals_concatenation():
    rng = np.random.default_rng(4)
    gt = rng.uniform(1.0, 50.0, size=300)
    pred = gt + rng.normal(0, 2.0, size=300)
    merged = MetricAccumulator().add(pred[:100], gt[:100]).merge(MetricAccumulator().add(pred[100:], gt[100:]))
    whole = MetricAccumulator().add(pred, gt)
    for name in METRIC_FIELDS:
        assert getattr(merged.report(), name) == pytest.approx(getattr(whole.report(), name), rel=1e-12)


def test_dataset_aggregation_is_pixel_weighted():
    # frame A: 1 pixel at 100 % error; frame B: 3 pixels exact
    acc = MetricAccumulator().add(np.array([2.0]), np.array([1.0])).add(np.ones(3), np.ones(3))
    assert acc.report().mape == pytest.approx(25.0)


def test_empty_accumulator_raises():
    with pytest.raises(DomainError):
        MetricAccumulator().report()


def test_mape_loss_value_and_masking():
    pred = torch.tensor([[2.0, 4.0, 1000.0]], requires_grad=True)
    gt = torch.tensor([[1.0, 4.0, 0.0]])
    valid = torch.tensor([[True, True, False]])
    loss = mape_loss(pred, gt, valid)
    assert loss.item() == pytest.approx(50.0)
    loss.backward()
    assert pred.grad[0, 2].item() == 0.0
    assert pred.grad[0, 0].item() == pytest.approx(50.0)


def test_mape_loss_gradcheck():
    rng = np.random.default_rng(6)
    gt = torch.tensor(rng.uniform(1.0, 10.0, size=(2, 5)), dtype=torch.float64)
    pred = (gt * torch.tensor(rng.uniform(0.5, 1.5, size=(2, 5)))).requires_grad_(True)
    valid = gt > 3.0
    assert torch.autograd.gradcheck(lambda p: mape_loss(p, gt, valid), (pred,))


def test_mape_loss_without_valid_pixels():
    with pytest.raises(DomainError):
        mape_loss(torch.ones(2, 2), torch.ones(2, 2), torch.zeros(2, 2, dtype=torch.bool))


def _onehot(indices, n):
    return np.eye(n)[np.asarray(indices)]


def test_iou_two_by_two():
    gt = SemanticLabelMap(data=_onehot([[0, 0], [1, 1]], 2))
    pred = SemanticLabelMap(data=_onehot([[0, 1], [1, 1]], 2))
    report = iou_per_class(pred, gt)
    assert report.per_class == pytest.approx([1 / 2, 2 / 3])
    assert report.mean_iou == pytest.approx(7 / 12)
    assert report.n_pixels == 4


def test_iou_absent_class_reported_as_one_and_excluded_from_mean():
    gt = SemanticLabelMap(data=_onehot([[0, 0], [1, 1]], 3))
    report = iou_per_class(gt, gt)
    assert report.per_class == [1.0, 1.0, 1.0]
    assert report.absent == [False, False, True]
    assert report.mean_iou == 1.0
    assert [name for name, _ in report.metric_items()] == ["mean_iou", "iou:0", "iou:1"]


def test_iou_uses_argmax_of_probabilities():
    gt = SemanticLabelMap(data=_onehot([[0, 1]], 2))
    pred = SemanticLabelMap(data=np.array([[[0.6, 0.4], [0.3, 0.7]]]))
    assert iou_per_class(pred, gt).mean_iou == 1.0


def test_iou_accumulator_sums_counts():
    acc = IoUAccumulator(2)
    acc.add(np.array([0, 0]), np.array([0, 1]))
    acc.add(np.array([1, 1]), np.array([1, 1]))
    assert acc.intersection.tolist() == [1, 2]
    assert acc.union.tolist() == [2, 3]


def test_iou_loss_uniform_half():
    gt = torch.tensor(_onehot([[0, 0], [1, 1]], 2), dtype=torch.float32).permute(2, 0, 1)[None]
    pred = torch.full_like(gt, 0.5)
    assert iou_loss(pred, gt).item() == pytest.approx(2 / 3)
    assert iou_loss(gt, gt).item() == pytest.approx(0.0)


def test_iou_loss_rejects_out_of_range():
    gt = torch.zeros(1, 2, 2, 2)
    with pytest.raises(DomainError):
        iou_loss(torch.full_like(gt, 1.5), gt)


def test_iou_loss_gradcheck():
    rng = np.random.default_rng(8)
    gt = torch.tensor(_onehot([[0, 1, 2], [2, 1, 0]], 3), dtype=torch.float64).permute(2, 0, 1)[None]
    pred = torch.tensor(rng.uniform(0.05, 0.95, size=(1, 3, 2, 3)), dtype=torch.float64, requires_grad=True)
    assert torch.autograd.gradcheck(lambda p: iou_loss(p, gt), (pred,))
