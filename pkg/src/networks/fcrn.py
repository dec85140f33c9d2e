"""
Encoder-decoder depth networks: a ResNet-50-style bottleneck encoder, a 1x1
bridge, up-projection decoder blocks back to input resolution, and a final
linear 3x3 projection to one depth channel.

Full profile: four encoder stages (stride 32), decoder 1024 -> 512 -> 256 ->
128 -> 64 -> 32. Slim profile: encoder stops after the third stage (stride 16)
and the decoder runs at half width, 512 -> 256 -> 128 -> 64 -> 32.
"""
import collections
from typing import List, Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from src.models.network import ModelOutputs, ModelSpec, Variant
from src.networks.blocks import (
    PROJECTION, SKIP, ResidualUnit, UpSamplingBlock, conv_bn, semantic_edges_tensor,
    semantic_mask_tensor, sobel_edges_tensor,
)
from src.validation.errors import ConfigurationError

MIN_CHANNELS = 4

# (units, out_channels, stride) per encoder stage
ENCODER_STAGES = ((3, 256, 1), (4, 512, 2), (6, 1024, 2), (3, 2048, 2))
STEM_CHANNELS = 64
FULL_DECODER = (1024, 512, 256, 128, 64, 32)
SLIM_DECODER = (512, 256, 128, 64, 32)
SLIM_STAGES = 3

# Initial bias of the depth projection, meters.
DEPTH_BIAS_INIT_M = 10.0


def scaled(channels: int, width_scale: float) -> int:
    return max(int(round(channels * width_scale)), MIN_CHANNELS)


class ResNetEncoder(nn.Module):
    """Stem (7x7/2 conv + 3x3/2 max-pool) followed by bottleneck stages."""

    def __init__(self, in_channels: int, n_stages: int, width_scale: float):
        super().__init__()
        stem = scaled(STEM_CHANNELS, width_scale)
        self.stem = nn.Sequential(collections.OrderedDict([
            ("conv", conv_bn(in_channels, stem, kernel_size=7, stride=2, padding=3)),
            ("relu", nn.ReLU(inplace=True)),
            ("pool", nn.MaxPool2d(kernel_size=3, stride=2, padding=1)),
        ]))
        stages = []
        channels = stem
        for units, out, stride in ENCODER_STAGES[:n_stages]:
            out = scaled(out, width_scale)
            layers = [ResidualUnit(PROJECTION, channels, out, stride)]
            layers += [ResidualUnit(SKIP, out, out) for _ in range(units - 1)]
            stages.append(nn.Sequential(*layers))
            channels = out
        self.stages = nn.Sequential(*stages)
        self.out_channels = channels

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.stages(self.stem(x))


class UpDecoder(nn.Module):
    """1x1 bridge followed by a chain of up-projection blocks."""

    def __init__(self, in_channels: int, widths: Sequence[int]):
        super().__init__()
        self.bridge = nn.Sequential(conv_bn(in_channels, widths[0], kernel_size=1, padding=0), nn.ReLU(inplace=True))
        self.blocks = nn.Sequential(*[UpSamplingBlock(a, b) for a, b in zip(widths[:-1], widths[1:])])
        self.out_channels = widths[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.blocks(self.bridge(x))


class DepthHead(nn.Module):
    """Optional up-projection blocks, then the linear 3x3 projection to depth."""

    def __init__(self, widths: Sequence[int]):
        super().__init__()
        self.blocks = nn.Sequential(*[UpSamplingBlock(a, b) for a, b in zip(widths[:-1], widths[1:])])
        self.project = nn.Conv2d(widths[-1], 1, kernel_size=3, padding=1, bias=True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.project(self.blocks(x))


def input_channels(spec: ModelSpec) -> int:
    base = spec.base_variant
    if base == Variant.M0:
        return 3
    if base in (Variant.M1, Variant.M2, Variant.M3, Variant.M4, Variant.M5):
        return 3 + spec.n_classes
    if base == Variant.M6:
        return 1
    if base == Variant.M7:
        return spec.n_classes
    raise ConfigurationError(f"variant {spec.variant.value} is not a depth network", field="variant")


class DepthNetwork(nn.Module):
    """
    One network class for every depth variant; the ModelSpec selects input transform,
    encoder profile and the presence of per-class semantic decoders.
    """

    def __init__(self, spec: ModelSpec):
        super().__init__()
        if spec.is_segmenter:
            raise ConfigurationError("UNET is not a depth network", field="variant")
        self.spec = spec
        ws = spec.width_scale
        self.encoder = ResNetEncoder(input_channels(spec), SLIM_STAGES if spec.is_slim else 4, ws)
        profile = [scaled(c, ws) for c in (SLIM_DECODER if spec.is_slim else FULL_DECODER)]

        variant = spec.variant
        if not spec.has_semantic_decoders:
            self.decoder = UpDecoder(self.encoder.out_channels, profile)
            self.head = DepthHead([profile[-1]])
            self.class_heads = None
        else:
            # common decoder stops at 1/4 (M4) or 1/2 (M2, M3, M5) resolution
            common_blocks = 3 if variant == Variant.M4 else 4
            common = profile[: common_blocks + 1]
            self.decoder = UpDecoder(self.encoder.out_channels, common)
            tail = profile[common_blocks:]
            extra = 3 if variant in (Variant.M4, Variant.M5) else 0
            self.head = None
            self.class_heads = nn.ModuleList(
                DepthHead([tail[0] + extra] + tail[1:]) for _ in range(spec.n_classes)
            )

    def prepare_input(self, image: torch.Tensor, semantic: torch.Tensor = None) -> torch.Tensor:
        """Network input tensor of the variant."""
        base = self.spec.base_variant
        if base == Variant.M0:
            return image
        if base in (Variant.M1, Variant.M2, Variant.M3, Variant.M4, Variant.M5):
            return torch.cat([image, semantic], dim=1)
        edges = sobel_edges_tensor(image)
        if base == Variant.M6:
            return edges
        return semantic_edges_tensor(edges, semantic)

    def forward(self, image: torch.Tensor, semantic: torch.Tensor = None) -> ModelOutputs:
        if self.spec.uses_semantic and semantic is None:
            raise ConfigurationError(f"variant {self.spec.variant.value} requires a semantic label map", field="semantic")
        features = self.decoder(self.encoder(self.prepare_input(image, semantic)))
        if self.class_heads is None:
            return ModelOutputs(depth=self.head(features))

        variant = self.spec.variant
        outputs = []
        for c, head in enumerate(self.class_heads):
            if variant in (Variant.M4, Variant.M5):
                masked = semantic_mask_tensor(image, semantic, c)
                masked = F.adaptive_avg_pool2d(masked, features.shape[-2:])
                outputs.append(head(torch.cat([features, masked], dim=1)))
            else:
                outputs.append(head(features))
        semantic_depth = torch.cat(outputs, dim=1)
        if variant == Variant.M5:
            semantic_depth = semantic_depth * semantic
        return ModelOutputs(depth=semantic_depth.sum(dim=1, keepdim=True), semantic_depth=semantic_depth)


def init_weights(module: nn.Module) -> None:
    """He fan-in normal for convolutions, ones/zeros for batch norm."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
            nn.init.kaiming_normal_(m.weight, mode="fan_in", nonlinearity="relu")
            if m.bias is not None:
                nn.init.zeros_(m.bias)
        elif isinstance(m, nn.BatchNorm2d):
            nn.init.ones_(m.weight)
            nn.init.zeros_(m.bias)


def init_depth_bias(network: DepthNetwork) -> None:
    heads: List[DepthHead] = [network.head] if network.head is not None else list(network.class_heads)
    # summed unmasked heads split the prior; masked heads (M5) each carry all of it
    summed = network.head is None and network.spec.variant != Variant.M5
    bias = DEPTH_BIAS_INIT_M / len(heads) if summed else DEPTH_BIAS_INIT_M
    for head in heads:
        nn.init.constant_(head.project.bias, bias)
