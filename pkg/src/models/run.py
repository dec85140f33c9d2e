from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union
from pydantic import BaseModel, Field, ConfigDict, model_validator

from src.models.network import ModelSpec

TRAIN_SPLIT = "train"
META_SPLIT = "meta"
TEST_SPLIT_PREFIX = "test:"

LOSS_MAPE = "mape"
LOSS_MAPE_PER_CLASS = "mape+per_class"
LOSS_MAPE_JOINT = "mape+joint"
LOSS_IOU = "iou"
LOSS_NAMES = (LOSS_MAPE, LOSS_MAPE_PER_CLASS, LOSS_MAPE_JOINT, LOSS_IOU)

# Flat dotted configuration keys -> RunConfig field paths.
CONFIG_KEYS = {
    "model.variant": ("model", "variant"),
    "model.input_size": ("model", "input_size"),
    "model.n_classes": ("model", "n_classes"),
    "model.width_scale": ("model", "width_scale"),
    "model.seed": ("model", "seed"),
    "data.train_manifests": ("train_manifests",),
    "data.eval_manifests": ("eval_manifests",),
    "data.split_train": ("split_train",),
    "train.batch_size": ("batch_size",),
    "train.lr": ("learning_rate",),
    "train.epochs": ("epochs",),
    "train.max_batches": ("max_batches",),
    "train.eval_every": ("eval_every",),
    "train.loss": ("loss",),
    "train.seed": ("seed",),
    "output_dir": ("output_dir",),
}


def eval_split_name(dataset_id: str) -> str:
    return f"{TEST_SPLIT_PREFIX}{dataset_id}"


class RunConfig(BaseModel):
    """One training run: model, data, optimizer budget, evaluation cadence, output location."""
    model: ModelSpec
    train_manifests: List[Path] = Field(..., min_length=1)
    eval_manifests: List[Path] = Field(default_factory=list, description="Evaluated in full, each separately.")
    split_train: bool = Field(True, description="Hold out each train manifest's test split for evaluation.")
    batch_size: int = Field(2, ge=1)
    learning_rate: float = Field(1e-3, gt=0.0)
    epochs: Optional[int] = Field(None, ge=1)
    max_batches: Optional[int] = Field(None, ge=1)
    eval_every: Union[Literal["epoch"], int] = Field("epoch", description="'epoch' or a positive batch count.")
    loss: Optional[str] = Field(None, description="Defaults per variant.")
    seed: int = 0
    output_dir: Path = Path("runs/default")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "model": {"variant": "M21", "input_size": [64, 64], "n_classes": 11, "width_scale": 0.1},
                "train_manifests": ["data/toy/manifest.json"],
                "batch_size": 2,
                "learning_rate": 0.001,
                "max_batches": 2000,
                "eval_every": 500,
                "output_dir": "runs/toy_overfit",
            }
        },
    )

    @model_validator(mode="after")
    def _check_budget(self):
        if self.epochs is None and self.max_batches is None:
            raise ValueError("either epochs or max_batches must be set")
        if isinstance(self.eval_every, int) and self.eval_every < 1:
            raise ValueError(f"eval_every must be positive, got {self.eval_every}")
        if self.loss is not None and self.loss not in LOSS_NAMES:
            raise ValueError(f"unknown loss '{self.loss}'. Known: {list(LOSS_NAMES)}")
        return self

    @classmethod
    def nest_flat(cls, flat: Dict[str, object]) -> Dict[str, object]:
        """Flat dotted keys -> nested field dict. Raises KeyError naming the first unknown key."""
        nested: Dict[str, object] = {}
        for key, value in flat.items():
            if key not in CONFIG_KEYS:
                raise KeyError(key)
            path = CONFIG_KEYS[key]
            target = nested
            for part in path[:-1]:
                target = target.setdefault(part, {})
            target[path[-1]] = value
        return nested


class RunRecord(BaseModel):
    """One row of the run log."""
    step: int = Field(..., ge=0)
    split: str
    metric_name: str
    value: float
    wall_time_s: float = 0.0

    model_config = ConfigDict(frozen=True)


class RunLog(BaseModel):
    """Append-only record list; steps strictly increase per (split, metric)."""
    records: List[RunRecord] = Field(default_factory=list)

    def append(self, step: int, split: str, items: List[Tuple[str, float]], wall_time_s: float = 0.0) -> None:
        for name, value in items:
            last = self.last_step(split, name)
            if last is not None and step <= last:
                raise ValueError(f"step {step} of {split}/{name} does not follow step {last}")
            self.records.append(
                RunRecord(step=step, split=split, metric_name=name, value=float(value), wall_time_s=wall_time_s)
            )

    def last_step(self, split: str, metric_name: str) -> Optional[int]:
        for record in reversed(self.records):
            if record.split == split and record.metric_name == metric_name:
                return record.step
        return None

    def series(self, split: str, metric_name: str) -> List[Tuple[int, float]]:
        return [(r.step, r.value) for r in self.records if r.split == split and r.metric_name == metric_name]

    def splits(self) -> List[str]:
        return list(dict.fromkeys(r.split for r in self.records))

    def metric_names(self, split: str) -> List[str]:
        return list(dict.fromkeys(r.metric_name for r in self.records if r.split == split))

    def last_value(self, split: str, metric_name: str) -> Optional[float]:
        values = self.series(split, metric_name)
        return values[-1][1] if values else None


class CheckpointEvaluation(BaseModel):
    """Result of evaluating one checkpoint on one dataset."""
    checkpoint: Path
    variant: str
    dataset_id: str
    in_domain: bool = Field(False, description="Dataset was among the checkpoint's training datasets.")
    metrics: Dict[str, float]


class CrossEvaluation(BaseModel):
    """Every checkpoint evaluated on every dataset."""
    cells: List[CheckpointEvaluation] = Field(default_factory=list)

    def cell(self, checkpoint: Path, dataset_id: str) -> Optional[CheckpointEvaluation]:
        for c in self.cells:
            if Path(c.checkpoint) == Path(checkpoint) and c.dataset_id == dataset_id:
                return c
        return None
