"""
Checkpoint directories: spec.json (ModelSpec) plus model.pt holding the state
dict and the ids of the datasets the model was trained on.
"""
import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import torch
import torch.nn as nn

from src.models.network import ModelSpec
from src.networks.factory import build
from src.validation.errors import DatasetError, IncompatibleCheckpointError

logger = logging.getLogger(__name__)

SPEC_FILENAME = "spec.json"
WEIGHTS_FILENAME = "model.pt"


def save_checkpoint(
    model: nn.Module,
    directory: Union[str, Path],
    train_dataset_ids: Optional[List[str]] = None,
    step: int = 0,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / SPEC_FILENAME).write_text(model.spec.model_dump_json(indent=2))
    state = {
        "state_dict": {k: v.detach().cpu() for k, v in model.state_dict().items()},
        "train_dataset_ids": list(train_dataset_ids or []),
        "step": int(step),
    }
    torch.save(state, directory / WEIGHTS_FILENAME)
    logger.debug(f"Saved checkpoint {directory} at step {step}")
    return directory


def load_checkpoint(
    directory: Union[str, Path], device: Optional[torch.device] = None
) -> Tuple[nn.Module, List[str]]:
    """Returns the rebuilt model (eval mode) and its training dataset ids."""
    directory = Path(directory)
    missing = [p for p in (directory / SPEC_FILENAME, directory / WEIGHTS_FILENAME) if not p.is_file()]
    if missing:
        raise DatasetError(f"checkpoint {directory} is incomplete", field="checkpoint", missing_paths=missing)
    spec = ModelSpec.model_validate_json((directory / SPEC_FILENAME).read_text())
    state = torch.load(directory / WEIGHTS_FILENAME, map_location="cpu", weights_only=True)
    model = build(spec)
    try:
        model.load_state_dict(state["state_dict"])
    except RuntimeError as e:
        raise IncompatibleCheckpointError(f"weights in {directory} do not fit {spec.variant.value}: {e}",
                                          field="checkpoint") from e
    if device is not None:
        model.to(device)
    model.eval()
    return model, list(state.get("train_dataset_ids", []))
