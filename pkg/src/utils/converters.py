"""
Utility functions for data conversion between numpy domain arrays and torch tensors.
"""
from typing import Optional, Sequence
import numpy as np
import torch

from src.models.sample import Sample


def hwc_to_chw(array: np.ndarray) -> torch.Tensor:
    """H x W x C numpy array -> C x H x W float32 tensor (copied, writable)."""
    return torch.from_numpy(np.ascontiguousarray(np.transpose(array, (2, 0, 1)), dtype=np.float32))


def hw_to_1hw(array: np.ndarray, dtype=np.float32) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(array[None], dtype=dtype))


def chw_to_hwc(tensor: torch.Tensor) -> np.ndarray:
    return tensor.detach().cpu().permute(1, 2, 0).numpy()


def batch_samples(samples: Sequence[Sample], device: Optional[torch.device] = None) -> dict:
    """
    Stacks samples into N x C x H x W tensors. Keys present only when every sample
    carries the modality: 'image', 'semantic', 'depth', 'valid'.
    """
    batch = {"image": torch.stack([hwc_to_chw(s.image.data) for s in samples])}
    if all(s.semantic is not None for s in samples):
        batch["semantic"] = torch.stack([hwc_to_chw(s.semantic.data) for s in samples])
    if all(s.depth is not None for s in samples):
        batch["depth"] = torch.stack([hw_to_1hw(s.depth.values) for s in samples])
        batch["valid"] = torch.stack([hw_to_1hw(s.depth.valid_mask, dtype=bool) for s in samples])
    if device is not None:
        batch = {k: v.to(device) for k, v in batch.items()}
    return batch
