"""
Builds networks from a ModelSpec and runs single-sample inference.
"""
import logging
from typing import Sequence, Union

import torch
import torch.nn as nn

from src.models.network import ModelOutputs, ModelSpec
from src.models.sample import Sample
from src.networks.fcrn import DepthNetwork, init_depth_bias, init_weights
from src.networks.unet import UNet
from src.utils.converters import batch_samples
from src.validation.errors import ConfigurationError

logger = logging.getLogger(__name__)


def build(spec: ModelSpec) -> nn.Module:
    """Instantiates the variant with weights drawn from spec.seed, leaving global RNG state untouched."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(spec.seed)
        model = UNet(spec) if spec.is_segmenter else DepthNetwork(spec)
        init_weights(model)
        if not spec.is_segmenter:
            init_depth_bias(model)
    logger.debug(f"Built {spec.variant.value} ({parameter_count(model)} trainable parameters)")
    return model


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def model_device(model: nn.Module) -> torch.device:
    return next(model.parameters()).device


def run_batch(model: nn.Module, batch: dict) -> ModelOutputs:
    spec: ModelSpec = model.spec
    semantic = batch.get("semantic")
    if spec.uses_semantic and semantic is None:
        raise ConfigurationError(f"variant {spec.variant.value} requires a semantic label map", field="semantic")
    if semantic is not None and semantic.shape[1] != spec.n_classes:
        raise ConfigurationError(
            f"variant {spec.variant.value} expects {spec.n_classes} classes, got {semantic.shape[1]}", field="semantic"
        )
    return model(batch["image"], semantic if spec.uses_semantic else None)


def forward(model: nn.Module, samples: Union[Sample, Sequence[Sample]]) -> ModelOutputs:
    """Inference in eval mode without gradients; deterministic for fixed parameters and input."""
    if isinstance(samples, Sample):
        samples = [samples]
    batch = batch_samples(samples, model_device(model))
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            return run_batch(model, batch)
    finally:
        model.train(was_training)
