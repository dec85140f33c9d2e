import os
import logging
from typing import Optional
from pathlib import Path

import torch
from dotenv import load_dotenv

from src.validation.errors import ConfigurationError

# Load environment variables from .env file
load_dotenv()

SEMDEPTH_DEVICE = os.getenv("SEMDEPTH_DEVICE", "cpu")
SEMDEPTH_LOG_LEVEL = os.getenv("SEMDEPTH_LOG_LEVEL", "INFO")
SEMDEPTH_DATA_ROOT = os.getenv("SEMDEPTH_DATA_ROOT", "./data")

logger = logging.getLogger(__name__)

_device: Optional[torch.device] = None


def get_device() -> torch.device:
    """
    Returns the compute device named by SEMDEPTH_DEVICE.
    Uses a singleton so every command shares one device object.
    """
    global _device
    if _device is None:
        name = os.getenv("SEMDEPTH_DEVICE", SEMDEPTH_DEVICE)
        try:
            device = torch.device(name)
        except RuntimeError as e:
            raise ConfigurationError(f"invalid SEMDEPTH_DEVICE '{name}': {e}", field="SEMDEPTH_DEVICE") from e
        if device.type == "cuda" and not torch.cuda.is_available():
            raise ConfigurationError("SEMDEPTH_DEVICE requests CUDA but CUDA is not available", field="SEMDEPTH_DEVICE")
        if device.type == "mps" and not torch.backends.mps.is_available():
            raise ConfigurationError("SEMDEPTH_DEVICE requests MPS but MPS is not available", field="SEMDEPTH_DEVICE")
        logger.info(f"Using compute device {device}")
        _device = device
    return _device


def reset_device() -> None:
    """Drops the cached device (tests switch SEMDEPTH_DEVICE)."""
    global _device
    _device = None


def data_root() -> Path:
    return Path(os.getenv("SEMDEPTH_DATA_ROOT", SEMDEPTH_DATA_ROOT))
