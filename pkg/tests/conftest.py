import sys
import os

# Add project root to the Python path
project_root = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
if project_root not in sys.path:
    sys.path.insert(0, project_root)
PROJECT_ROOT = project_root

import numpy as np
import pytest
import torch
from dotenv import load_dotenv

from src.models.registry import ClassRegistry
from src.presets import registry_preset
from src.runtime.device import reset_device
from src.services.datasets import write_dataset
from src.services.toy_scenes import generate_toy_dataset

# --- Load .env file ---
dotenv_path = os.path.join(PROJECT_ROOT, '.env')
if os.path.exists(dotenv_path):
    load_dotenv(dotenv_path=dotenv_path, override=True)
# Tests always run on the CPU unless told otherwise
os.environ.setdefault("SEMDEPTH_DEVICE", "cpu")

TOY_SIZE = 64
TOY_SEED = 7


def pytest_collection_modifyitems(config, items):
    """Slow acceptance runs are opt-in through SEMDEPTH_RUN_SLOW=1."""
    if os.getenv("SEMDEPTH_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="slow; set SEMDEPTH_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def seeded_rngs():
    """Fixed global RNG state for every test."""
    torch.manual_seed(0)
    np.random.seed(0)
    yield
    reset_device()


@pytest.fixture(scope="session")
def common_registry() -> ClassRegistry:
    return registry_preset("common")


@pytest.fixture(scope="session")
def toy_samples(common_registry):
    """Four 64x64 toy frames."""
    return generate_toy_dataset(4, TOY_SIZE, common_registry, seed=TOY_SEED)


@pytest.fixture
def toy_manifest(tmp_path, toy_samples):
    """Toy frames written to disk; returns the manifest path."""
    return write_dataset(toy_samples, tmp_path / "data", "toy")


@pytest.fixture
def toy_dataset_factory(tmp_path, common_registry):
    """Writes n toy frames under tmp_path/<dataset_id>_data and returns the manifest path."""
    def _make(n: int, seed: int = TOY_SEED, dataset_id: str = "toy", size: int = TOY_SIZE, **fields):
        samples = generate_toy_dataset(n, size, common_registry, seed=seed)
        samples = [s.model_copy(update={"dataset_id": dataset_id}) for s in samples]
        return write_dataset(samples, tmp_path / f"{dataset_id}_data", dataset_id, **fields)
    return _make
