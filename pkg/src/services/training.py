"""
Training loop, per-variant losses, RunLog CSV persistence and windowed averages.
"""
import csv
import logging
import time
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field

from src.models.dataset import DatasetManifest
from src.models.network import ModelOutputs, ModelSpec, Variant
from src.models.run import (
    LOSS_IOU, LOSS_MAPE, LOSS_MAPE_JOINT, LOSS_MAPE_PER_CLASS, META_SPLIT, TRAIN_SPLIT,
    RunConfig, RunLog, eval_split_name,
)
from src.models.sample import Sample
from src.networks.checkpoint import save_checkpoint
from src.networks.factory import build, parameter_count, run_batch
from src.runtime.device import get_device
from src.services.datasets import load_manifest, load_samples, split_manifest
from src.services.evaluation import check_compatibility, check_sample_size, evaluate_samples, measure_runtime
from src.services.metrics import iou_loss, mape_loss
from src.utils.converters import batch_samples
from src.validation.errors import ConfigurationError, DatasetError, DomainError, NonFiniteLossError

logger = logging.getLogger(__name__)

RUN_LOG_FILENAME = "run_log.csv"
RUN_LOG_HEADER = ["step", "split", "metric_name", "value", "wall_time_s"]
CHECKPOINT_DIR = "checkpoints"
FINAL_CHECKPOINT_DIR = "final"
# label probability above which a pixel counts as belonging to a class
CLASS_PRESENT = 0.5


class TrainResult(BaseModel):
    run_log: RunLog
    final_checkpoint: Path
    checkpoints: List[Path] = Field(default_factory=list)
    run_log_path: Path
    steps_per_epoch: int
    total_steps: int

    model_config = ConfigDict(arbitrary_types_allowed=True)


def default_loss(spec: ModelSpec) -> str:
    """
    Loss name per variant. M2's mape+joint is one masked MAPE over all class
    branches, each pixel counted once against its own class head; it is not the
    mean of per-branch losses used by mape+per_class.
    """
    if spec.is_segmenter:
        return LOSS_IOU
    if spec.variant == Variant.M2:
        return LOSS_MAPE_JOINT
    if spec.variant in (Variant.M3, Variant.M4, Variant.M5):
        return LOSS_MAPE_PER_CLASS
    return LOSS_MAPE


def _joint_semantic_mape(outputs: ModelOutputs, batch: dict) -> Optional[torch.Tensor]:
    """MAPE of every class branch against the shared depth, over pixels of that class."""
    semantic_depth = outputs.semantic_depth
    gt = batch["depth"].expand_as(semantic_depth)
    mask = batch["valid"].expand_as(semantic_depth) & (batch["semantic"] > CLASS_PRESENT)
    if not bool(mask.any()):
        return None
    return mape_loss(semantic_depth, gt, mask)


def _per_class_mape(outputs: ModelOutputs, batch: dict) -> Optional[torch.Tensor]:
    """Mean over classes present in the batch of the class-masked branch MAPE."""
    terms = []
    for c in range(outputs.semantic_depth.shape[1]):
        mask = batch["valid"] & (batch["semantic"][:, c:c + 1] > CLASS_PRESENT)
        if bool(mask.any()):
            terms.append(mape_loss(outputs.semantic_depth[:, c:c + 1], batch["depth"], mask))
    if not terms:
        return None
    return torch.stack(terms).mean()


def compute_loss(loss_name: str, outputs: ModelOutputs, batch: dict) -> torch.Tensor:
    if loss_name == LOSS_IOU:
        if outputs.segmentation is None:
            raise ConfigurationError("iou loss needs a segmentation output", field="loss")
        return iou_loss(outputs.segmentation, batch["semantic"])
    if outputs.depth is None:
        raise ConfigurationError(f"{loss_name} loss needs a depth output", field="loss")

    loss = mape_loss(outputs.depth, batch["depth"], batch["valid"])
    if loss_name == LOSS_MAPE:
        return loss
    if outputs.semantic_depth is None:
        raise ConfigurationError(f"{loss_name} loss needs per-class depth outputs", field="loss")
    extra = _joint_semantic_mape(outputs, batch) if loss_name == LOSS_MAPE_JOINT else _per_class_mape(outputs, batch)
    return loss if extra is None else loss + extra


def _load_training_data(config: RunConfig) -> Tuple[List[Sample], List[str], List[Tuple[str, List[Sample]]]]:
    """Concatenated train samples, their dataset ids and the (dataset_id, samples) eval sets."""
    spec = config.model
    train_samples: List[Sample] = []
    train_ids: List[str] = []
    eval_sets: List[Tuple[str, List[Sample]]] = []

    for path in config.train_manifests:
        manifest = load_manifest(path)
        check_compatibility(spec, manifest)
        train_ids.append(manifest.dataset_id)
        if config.split_train:
            train_frames, test_frames = split_manifest(manifest)
            train_samples.extend(load_samples(manifest, train_frames))
            eval_sets.append((manifest.dataset_id, load_samples(manifest, test_frames)))
        else:
            train_samples.extend(load_samples(manifest))

    for path in config.eval_manifests:
        manifest: DatasetManifest = load_manifest(path)
        check_compatibility(spec, manifest)
        eval_sets.append((manifest.dataset_id, load_samples(manifest)))

    check_sample_size(spec, train_samples, "+".join(train_ids))
    for dataset_id, samples in eval_sets:
        check_sample_size(spec, samples, dataset_id)
    return train_samples, train_ids, eval_sets


def plan_steps(config: RunConfig, n_train: int) -> Tuple[int, int, int]:
    """(steps_per_epoch, total_steps, eval_interval). Partial last batches are dropped."""
    steps_per_epoch = n_train // config.batch_size
    if steps_per_epoch == 0:
        raise DatasetError(
            f"{n_train} training samples cannot fill one batch of {config.batch_size}", field="batch_size"
        )
    budgets = []
    if config.epochs is not None:
        budgets.append(config.epochs * steps_per_epoch)
    if config.max_batches is not None:
        budgets.append(config.max_batches)
    eval_interval = steps_per_epoch if config.eval_every == "epoch" else int(config.eval_every)
    return steps_per_epoch, min(budgets), eval_interval


def train(config: RunConfig, device: Optional[torch.device] = None) -> TrainResult:
    """
    Adam on the masked loss of the variant; evaluates every eval set and writes a
    checkpoint at each evaluation; ends with a final checkpoint and the RunLog CSV.
    Deterministic for a given config seed and device.
    """
    device = device or get_device()
    spec = config.model
    loss_name = config.loss or default_loss(spec)
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    train_samples, train_ids, eval_sets = _load_training_data(config)
    steps_per_epoch, total_steps, eval_interval = plan_steps(config, len(train_samples))
    logger.info(
        f"Training {spec.variant.value} on {train_ids}: {len(train_samples)} samples, "
        f"{steps_per_epoch} steps/epoch, {total_steps} steps, loss '{loss_name}'"
    )

    torch.manual_seed(config.seed)
    model = build(spec).to(device)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)

    log = RunLog()
    checkpoints: List[Path] = []
    last_good: Optional[Path] = None
    loss_sum, mape_sum, n_batches = 0.0, 0.0, 0
    started = time.perf_counter()
    order = np.arange(len(train_samples))

    for step in range(1, total_steps + 1):
        epoch, position = divmod(step - 1, steps_per_epoch)
        if position == 0:
            order = np.random.default_rng([config.seed, epoch]).permutation(len(train_samples))
        indices = order[position * config.batch_size:(position + 1) * config.batch_size]
        batch = batch_samples([train_samples[i] for i in indices], device)

        outputs = run_batch(model, batch)
        loss = compute_loss(loss_name, outputs, batch)
        if not bool(torch.isfinite(loss)):
            raise NonFiniteLossError(
                f"loss became {float(loss)} at step {step}; last good checkpoint: {last_good}",
                last_good_checkpoint=last_good,
            )
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        loss_sum += float(loss.detach())
        if outputs.depth is not None:
            mape_sum += float(mape_loss(outputs.depth.detach(), batch["depth"], batch["valid"]))
        n_batches += 1

        if step % eval_interval != 0 and step != total_steps:
            continue
        wall_time = time.perf_counter() - started
        train_items = [("loss", loss_sum / n_batches)]
        if outputs.depth is not None:
            train_items.append(("mape", mape_sum / n_batches))
        log.append(step, TRAIN_SPLIT, train_items, wall_time)
        loss_sum, mape_sum, n_batches = 0.0, 0.0, 0

        for dataset_id, samples in eval_sets:
            report = evaluate_samples(model, samples)
            log.append(step, eval_split_name(dataset_id), report.metric_items(), time.perf_counter() - started)
            headline = report.metric_items()[0]
            logger.info(f"step {step} (epoch {step / steps_per_epoch:.2f}) test:{dataset_id} {headline[0]}={headline[1]:.4f}")

        last_good = save_checkpoint(model, output_dir / CHECKPOINT_DIR / f"step_{step:06d}", train_ids, step)
        checkpoints.append(last_good)
        logger.info(f"step {step} (epoch {step / steps_per_epoch:.2f}) train {train_items}")

    final = save_checkpoint(model, output_dir / FINAL_CHECKPOINT_DIR, train_ids, total_steps)
    runtime = measure_runtime(model, train_samples[0])
    log.append(total_steps, META_SPLIT, [("trainable_params", parameter_count(model)), ("runtime_s", runtime)],
               time.perf_counter() - started)
    log_path = write_run_log(log, output_dir / RUN_LOG_FILENAME)
    return TrainResult(
        run_log=log,
        final_checkpoint=final,
        checkpoints=checkpoints,
        run_log_path=log_path,
        steps_per_epoch=steps_per_epoch,
        total_steps=total_steps,
    )


def write_run_log(log: RunLog, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RUN_LOG_HEADER)
        for r in log.records:
            writer.writerow([r.step, r.split, r.metric_name, repr(r.value), repr(r.wall_time_s)])
    return path


def read_run_log(path: Union[str, Path]) -> RunLog:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"run log {path} not found", field="run_log", missing_paths=[path])
    log = RunLog()
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != RUN_LOG_HEADER:
            raise DatasetError(f"run log {path} has header {reader.fieldnames}, expected {RUN_LOG_HEADER}",
                               field="run_log")
        for row in reader:
            log.append(int(row["step"]), row["split"], [(row["metric_name"], float(row["value"]))],
                       float(row["wall_time_s"]))
    return log


def windowed_average(
    log: RunLog,
    metric: str,
    from_epoch: float,
    to_epoch: float,
    split: Optional[str] = None,
    steps_per_epoch: Optional[int] = None,
) -> float:
    """
    Mean of a metric over evaluations whose epoch lies in [from_epoch, to_epoch].
    Without steps_per_epoch the n-th evaluation of the split counts as epoch n.
    The split defaults to the first test split that logged the metric.
    """
    if split is None:
        candidates = [s for s in log.splits() if s != TRAIN_SPLIT and s != META_SPLIT and metric in log.metric_names(s)]
        if not candidates:
            candidates = [s for s in log.splits() if metric in log.metric_names(s)]
        if not candidates:
            raise DomainError(f"metric '{metric}' not in run log", field="metric")
        split = candidates[0]

    series = log.series(split, metric)
    if steps_per_epoch is None:
        epochs = range(1, len(series) + 1)
    else:
        epochs = [step / steps_per_epoch for step, _ in series]
    values = [value for epoch, (_, value) in zip(epochs, series) if from_epoch <= epoch <= to_epoch]
    if not values:
        raise DomainError(f"no {split}/{metric} evaluations between epoch {from_epoch} and {to_epoch}", field="window")
    return float(np.mean(values))
