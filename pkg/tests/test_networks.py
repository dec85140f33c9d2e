import pytest
import torch
from pydantic import ValidationError

from src.models.network import ModelSpec, Variant
from src.networks.checkpoint import load_checkpoint, save_checkpoint
from src.networks.factory import build, forward, parameter_count, run_batch
from src.services.training import compute_loss, default_loss
from src.utils.converters import batch_samples
from src.validation.errors import ConfigurationError, DatasetError

WIDTH = 0.25
DEPTH_VARIANTS = [v for v in Variant if v != Variant.UNET]


def _spec(variant, **kwargs):
    return ModelSpec(variant=variant, input_size=(64, 64), n_classes=11, width_scale=WIDTH, **kwargs)


@pytest.mark.parametrize("variant", DEPTH_VARIANTS, ids=lambda v: v.value)
def test_depth_variants_output_full_resolution(variant, toy_samples):
    model = build(_spec(variant))
    outputs = forward(model, toy_samples[:2])
    assert outputs.depth.shape == (2, 1, 64, 64)
    assert torch.isfinite(outputs.depth).all()
    assert outputs.segmentation is None
    if variant in (Variant.M2, Variant.M3, Variant.M4, Variant.M5):
        assert outputs.semantic_depth.shape == (2, 11, 64, 64)
    else:
        assert outputs.semantic_depth is None


def test_unet_outputs_softmax(toy_samples):
    outputs = forward(build(_spec(Variant.UNET)), toy_samples[:2])
    assert outputs.depth is None
    assert outputs.segmentation.shape == (2, 11, 64, 64)
    torch.testing.assert_close(outputs.segmentation.sum(dim=1), torch.ones(2, 64, 64))
    label_map = outputs.segmentation_map(0)
    assert label_map.channels == 11
    assert (label_map.data.sum(axis=2) == 1).all()


@pytest.mark.parametrize("variant", [Variant.M2, Variant.M3, Variant.M4], ids=lambda v: v.value)
def test_semantic_decoder_depth_is_class_sum(variant, toy_samples):
    outputs = forward(build(_spec(variant)), toy_samples[0])
    torch.testing.assert_close(outputs.depth, outputs.semantic_depth.sum(dim=1, keepdim=True))


def test_m5_masks_each_class_output(toy_samples):
    sample = toy_samples[0]
    outputs = forward(build(_spec(Variant.M5)), sample)
    semantic = batch_samples([sample])["semantic"]
    assert torch.all(outputs.semantic_depth[semantic == 0] == 0)
    torch.testing.assert_close(outputs.depth, outputs.semantic_depth.sum(dim=1, keepdim=True))


def test_depth_bias_starts_at_prior():
    assert build(_spec(Variant.M0)).head.project.bias.item() == pytest.approx(10.0)
    # summed heads share the prior, masked heads each carry it
    summed = build(_spec(Variant.M2)).class_heads
    assert sum(h.project.bias.item() for h in summed) == pytest.approx(10.0)
    masked = build(_spec(Variant.M5)).class_heads
    assert all(h.project.bias.item() == pytest.approx(10.0) for h in masked)


def _every_class_batch(toy_samples, n_classes=11):
    """Toy images with column stripes of every class and dense positive depth."""
    batch = batch_samples(toy_samples[:2])
    n, _, h, w = batch["image"].shape
    stripes = (torch.arange(w) * n_classes // w).expand(n, h, w)
    batch["semantic"] = torch.nn.functional.one_hot(stripes, n_classes).permute(0, 3, 1, 2).float()
    generator = torch.Generator().manual_seed(3)
    batch["depth"] = 2.0 + 48.0 * torch.rand(n, 1, h, w, generator=generator)
    batch["valid"] = torch.ones(n, 1, h, w, dtype=torch.bool)
    return batch


def _parameter_group(name):
    parts = name.split(".")
    return ".".join(parts[:2]) if parts[0] in ("class_heads", "down", "up") else parts[0]


@pytest.mark.parametrize("variant", list(Variant), ids=lambda v: v.value)
def test_gradients_reach_every_parameter(variant, toy_samples):
    spec = _spec(variant)
    model = build(spec)
    model.train()
    batch = _every_class_batch(toy_samples)
    loss = compute_loss(default_loss(spec), run_batch(model, batch), batch)
    loss.backward()

    missing = [name for name, p in model.named_parameters() if p.grad is None]
    assert missing == []
    grad_mass = {}
    for name, p in model.named_parameters():
        group = _parameter_group(name)
        grad_mass[group] = grad_mass.get(group, 0.0) + p.grad.abs().sum().item()
    if variant in (Variant.M2, Variant.M3, Variant.M4, Variant.M5):
        assert {f"class_heads.{c}" for c in range(11)} <= set(grad_mass)
    dead = [group for group, mass in grad_mass.items() if not mass > 0]
    assert dead == []


@pytest.mark.parametrize("slim,full", [(Variant.M21, Variant.M1), (Variant.M18, Variant.M7),
                                       (Variant.M20, Variant.M0), (Variant.M19, Variant.M6)])
def test_slim_variants_have_fewer_parameters(slim, full):
    assert parameter_count(build(_spec(slim))) < parameter_count(build(_spec(full)))


def test_build_is_deterministic_in_seed(toy_samples):
    first = forward(build(_spec(Variant.M21, seed=3)), toy_samples[0]).depth
    second = forward(build(_spec(Variant.M21, seed=3)), toy_samples[0]).depth
    other = forward(build(_spec(Variant.M21, seed=4)), toy_samples[0]).depth
    torch.testing.assert_close(first, second)
    assert not torch.allclose(first, other)


def test_build_leaves_global_rng_untouched():
    torch.manual_seed(123)
    expected = torch.rand(3)
    torch.manual_seed(123)
    build(_spec(Variant.M20))
    torch.testing.assert_close(torch.rand(3), expected)


def test_checkpoint_round_trip(tmp_path, toy_samples):
    model = build(_spec(Variant.M4))
    directory = save_checkpoint(model, tmp_path / "ckpt", train_dataset_ids=["toy"], step=7)
    restored, train_ids = load_checkpoint(directory)
    assert train_ids == ["toy"]
    assert restored.spec == model.spec
    torch.testing.assert_close(forward(restored, toy_samples[0]).depth, forward(model, toy_samples[0]).depth)


def test_incomplete_checkpoint(tmp_path):
    (tmp_path / "ckpt").mkdir()
    with pytest.raises(DatasetError) as exc_info:
        load_checkpoint(tmp_path / "ckpt")
    assert exc_info.value.field == "checkpoint"
    assert len(exc_info.value.missing_paths) == 2


@pytest.mark.parametrize("variant", [Variant.M1, Variant.M7, Variant.M21], ids=lambda v: v.value)
def test_semantic_variants_require_labels(variant, toy_samples):
    image_only = toy_samples[0].with_semantic(None)
    with pytest.raises(ConfigurationError) as exc_info:
        forward(build(_spec(variant)), image_only)
    assert exc_info.value.field == "semantic"


def test_image_only_variant_ignores_missing_labels(toy_samples):
    outputs = forward(build(_spec(Variant.M0)), toy_samples[0].with_semantic(None))
    assert outputs.depth.shape == (1, 1, 64, 64)


@pytest.mark.parametrize("kwargs", [
    {"input_size": (64, 48)},
    {"input_size": (0, 64)},
    {"width_scale": 0.0},
    {"width_scale": 1.5},
    {"n_classes": 0},
])
def test_invalid_specs(kwargs):
    fields = {"variant": Variant.M1, "input_size": (64, 64), "n_classes": 11, **kwargs}
    with pytest.raises(ValidationError):
        ModelSpec(**fields)
