import csv
import shutil
import tomllib
from pathlib import Path

import pytest

from src.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main, run_command
from src.models.network import ModelSpec, Variant
from src.networks.checkpoint import save_checkpoint
from src.networks.factory import build
from src.services.datasets import load_manifest, load_samples


def _toygen(out, n=4, seed=7, *extra):
    return run_command(["toygen", "--n", str(n), "--size", "64", "--seed", str(seed), "--out", str(out), *extra])


def _checkpoint(tmp_path, variant=Variant.M20, name="ckpt"):
    model = build(ModelSpec(variant=variant, input_size=(64, 64), n_classes=11, width_scale=0.1))
    return save_checkpoint(model, tmp_path / name, train_dataset_ids=["toy"])


def _strip_modalities(manifest_path, *names):
    for name in names:
        shutil.rmtree(manifest_path.parent / name)


def test_toygen_is_deterministic(tmp_path):
    first = _toygen(tmp_path / "a")
    second = _toygen(tmp_path / "b")
    assert first.exit_code == EXIT_OK and second.exit_code == EXIT_OK
    manifest = first.paths[0]
    assert manifest.name == "manifest.json"
    for sub in ("image", "semantic", "depth"):
        for path in sorted((manifest.parent / sub).iterdir()):
            twin = tmp_path / "b" / "toy" / sub / path.name
            assert path.read_bytes() == twin.read_bytes()


def test_toygen_rejects_bad_size(tmp_path):
    result = run_command(["toygen", "--n", "2", "--size", "50", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_FAILURE
    assert "divisible by 32" in result.summary


def test_missing_required_argument_is_usage_error(tmp_path):
    assert run_command(["toygen", "--out", str(tmp_path)]).exit_code == EXIT_USAGE
    assert run_command(["no-such-command"]).exit_code == EXIT_USAGE


def test_eval_reports_metrics(tmp_path):
    manifest = _toygen(tmp_path / "data").paths[0]
    result = run_command(["eval", "--checkpoint", str(_checkpoint(tmp_path)), "--manifest", str(manifest),
                          "--out", str(tmp_path / "eval")])
    assert result.exit_code == EXIT_OK
    assert "M20 on 'toy': mape=" in result.summary
    with open(result.paths[0], newline="") as f:
        rows = list(csv.DictReader(f))
    assert {row["metric_name"] for row in rows} >= {"mape", "rmse", "delta1"}
    assert all(row["in_domain"] == "1" for row in rows)


def test_eval_on_image_only_manifest_fails(tmp_path, capsys):
    manifest = _toygen(tmp_path / "data").paths[0]
    _strip_modalities(manifest, "depth", "semantic")
    code = main(["eval", "--checkpoint", str(_checkpoint(tmp_path)), "--manifest", str(manifest)])
    assert code == EXIT_FAILURE
    assert "manifest lacks depth" in capsys.readouterr().err


def test_eval_grid_skips_incompatible_pairs(tmp_path):
    full = _toygen(tmp_path / "data").paths[0]
    image_only = _toygen(tmp_path / "bare", 4, 7, "--dataset-id", "bare").paths[0]
    _strip_modalities(image_only, "depth", "semantic")
    result = run_command(["eval", "--checkpoint", str(_checkpoint(tmp_path)),
                          "--manifest", str(full), str(image_only)])
    assert result.exit_code == EXIT_OK
    assert "1 checkpoint/dataset pairs" in result.summary


def _write_config(tmp_path, manifest, **train):
    lines = [
        'output_dir = "run"',
        "[model]",
        'variant = "M20"',
        "input_size = 64",
        "width_scale = 0.1",
        "[data]",
        f'train_manifests = "{manifest}"',
        "split_train = false",
        "[train]",
        "batch_size = 2",
    ] + [f"{key} = {value}" for key, value in train.items()]
    path = tmp_path / "run.toml"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_train_from_config_with_overrides(tmp_path):
    manifest = _toygen(tmp_path / "data").paths[0]
    config = _write_config(tmp_path, manifest, max_batches=4, eval_every=2)
    result = run_command(["train", "--config", str(config), "--set", "train.max_batches=2"])
    assert result.exit_code == EXIT_OK, result.summary
    assert "ran 2 steps" in result.summary
    run_log, final = result.paths
    assert run_log == tmp_path / "run" / "run_log.csv"
    assert (final / "spec.json").is_file()


def test_train_unknown_key_is_usage_error(tmp_path):
    manifest = _toygen(tmp_path / "data").paths[0]
    config = _write_config(tmp_path, manifest, max_batches=2)
    result = run_command(["train", "--config", str(config), "--set", "train.momentum=0.9"])
    assert result.exit_code == EXIT_USAGE
    assert "train.momentum" in result.summary


def test_train_invalid_value_is_configuration_error(tmp_path):
    manifest = _toygen(tmp_path / "data").paths[0]
    config = _write_config(tmp_path, manifest, max_batches=2)
    result = run_command(["train", "--config", str(config), "--set", "model.variant=M99"])
    assert result.exit_code == EXIT_FAILURE
    assert "invalid run config" in result.summary


def test_prepare_crops_and_resizes(tmp_path):
    manifest = _toygen(tmp_path / "data").paths[0]
    result = run_command(["prepare", "--manifest", str(manifest), "--target-size", "64", "32",
                          "--dataset-id", "toy_afov", "--out", str(tmp_path / "prepared")])
    assert result.exit_code == EXIT_OK
    prepared = load_manifest(result.paths[0])
    assert prepared.dataset_id == "toy_afov"
    assert {s.size for s in load_samples(prepared)} == {(64, 32)}


def test_prepare_unknown_reference(tmp_path):
    manifest = _toygen(tmp_path / "data").paths[0]
    result = run_command(["prepare", "--manifest", str(manifest), "--target-afov-ref", "pinhole9",
                          "--out", str(tmp_path / "prepared")])
    assert result.exit_code == EXIT_FAILURE
    assert "pinhole9" in result.summary


def test_segment_writes_labelled_manifest(tmp_path):
    manifest = _toygen(tmp_path / "data").paths[0]
    unet = _checkpoint(tmp_path, Variant.UNET, "unet")
    result = run_command(["segment", "--checkpoint", str(unet), "--manifest", str(manifest),
                          "--out", str(tmp_path / "seg")])
    assert result.exit_code == EXIT_OK
    labelled = load_manifest(result.paths[0])
    assert labelled.has_semantic and labelled.has_depth
    assert len(list((tmp_path / "seg" / "toy" / "semantic_pred").iterdir())) == 4


def test_segment_rejects_depth_checkpoint(tmp_path):
    manifest = _toygen(tmp_path / "data").paths[0]
    result = run_command(["segment", "--checkpoint", str(_checkpoint(tmp_path)), "--manifest", str(manifest),
                          "--out", str(tmp_path / "seg")])
    assert result.exit_code == EXIT_FAILURE


def test_analyze_depth_heatmaps_and_distances(tmp_path):
    first = _toygen(tmp_path / "a", 2, 1).paths[0]
    second = _toygen(tmp_path / "b", 2, 2, "--dataset-id", "other").paths[0]
    result = run_command(["analyze", "depth-heatmap", "--manifest", str(first), str(second),
                          "--out", str(tmp_path / "report")])
    assert result.exit_code == EXIT_OK
    names = {p.name for p in result.paths}
    assert {"heatmap_depth_toy.png", "heatmap_depth_other.csv", "heatmap_distances.csv"} <= names


def test_analyze_accuracy_heatmap(tmp_path):
    manifest = _toygen(tmp_path / "data", 2).paths[0]
    result = run_command(["analyze", "accuracy-heatmap", "--checkpoint", str(_checkpoint(tmp_path)),
                          "--manifest", str(manifest), "--out", str(tmp_path / "report")])
    assert result.exit_code == EXIT_OK
    assert {p.name for p in result.paths} == {"heatmap_accuracy_M20_toy.png", "heatmap_accuracy_M20_toy.csv"}


@pytest.fixture
def two_run_logs(tmp_path):
    manifest = _toygen(tmp_path / "data").paths[0]
    paths = []
    for variant in ("M20", "M0"):
        config = _write_config(tmp_path, manifest, max_batches=4, eval_every=2)
        result = run_command(["train", "--config", str(config), "--set", f'model.variant="{variant}"',
                              "--set", "data.eval_manifests=" + f'"{manifest}"',
                              "--out", str(tmp_path / variant)])
        assert result.exit_code == EXIT_OK, result.summary
        paths.append(result.paths[0])
    return paths


def test_compare_writes_tables(tmp_path, two_run_logs):
    reference, candidate = two_run_logs
    result = run_command(["compare", "--logs", f"M20={reference}", f"M0={candidate}",
                          "--from-epoch", "1", "--to-epoch", "2", "--out", str(tmp_path / "cmp")])
    assert result.exit_code == EXIT_OK, result.summary
    names = {p.name for p in result.paths}
    assert {"windowed_averages.csv", "relative_superiority.csv", "curve_test_toy_mape.png"} <= names


def test_compare_duplicate_labels(tmp_path, two_run_logs):
    result = run_command(["compare", "--logs", f"x={two_run_logs[0]}", f"x={two_run_logs[1]}",
                          "--out", str(tmp_path / "cmp")])
    assert result.exit_code == EXIT_USAGE


def test_project_metadata_names_the_toolkit():
    with open(Path(__file__).resolve().parents[1] / "pyproject.toml", "rb") as f:
        project = tomllib.load(f)["project"]
    assert project["name"] == "semantic-depth-toolkit"
    assert project["authors"] == [{"name": "Semantic Depth Toolkit maintainers"}]
    assert project["scripts"]["semdepth"] == "src.main:main"
