"""
Overfit smoke runs: tiny networks must memorize four toy frames. Slow; enable
with SEMDEPTH_RUN_SLOW=1.
"""
import pytest

from src.models.network import ModelSpec, Variant
from src.models.run import TRAIN_SPLIT, RunConfig
from src.services.evaluation import evaluate
from src.services.training import train

pytestmark = pytest.mark.slow

OVERFIT_STEPS = 2000
OVERFIT_MAPE = 5.0


def _overfit_config(manifest, out, variant):
    return RunConfig(
        model=ModelSpec(variant=variant, input_size=(64, 64), n_classes=11, width_scale=0.1),
        train_manifests=[manifest],
        eval_manifests=[manifest],
        split_train=False,
        batch_size=2,
        learning_rate=1e-3,
        max_batches=OVERFIT_STEPS,
        eval_every=500,
        output_dir=out,
    )


@pytest.mark.parametrize("variant", [Variant.M20, Variant.M21, Variant.M18], ids=lambda v: v.value)
def test_depth_variant_memorizes_toy_set(toy_manifest, tmp_path, variant):
    result = train(_overfit_config(toy_manifest, tmp_path / variant.value, variant))
    assert result.run_log.last_value(TRAIN_SPLIT, "mape") < OVERFIT_MAPE
    if variant == Variant.M21:
        assert evaluate(result.final_checkpoint, toy_manifest).delta1 > 0.95


def test_unet_memorizes_toy_labels(toy_manifest, tmp_path):
    result = train(_overfit_config(toy_manifest, tmp_path / "unet", Variant.UNET))
    assert result.run_log.last_value("test:toy", "mean_iou") > 0.9
