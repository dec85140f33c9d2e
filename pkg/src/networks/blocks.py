"""
Building blocks of the encoder-decoder depth networks and the input transforms
(Sobel edges, semantic masking, semantic edges).
"""
import collections
from typing import Union

import kornia
import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from pydantic import BaseModel, Field, ConfigDict

from src.models.sample import ImageTensor, SemanticLabelMap
from src.utils.converters import chw_to_hwc, hwc_to_chw
from src.validation.errors import ConfigurationError, DomainError, ShapeMismatchError

SKIP = "skip"
PROJECTION = "projection"


class TensorSpec(BaseModel):
    """Per-sample feature map shape."""
    height: int = Field(..., gt=0)
    width: int = Field(..., gt=0)
    channels: int = Field(..., gt=0)

    model_config = ConfigDict(frozen=True)


def conv_bn(in_channels: int, out_channels: int, kernel_size=3, stride: int = 1, padding=1) -> nn.Sequential:
    return nn.Sequential(collections.OrderedDict([
        ("conv", nn.Conv2d(in_channels, out_channels, kernel_size, stride=stride, padding=padding, bias=False)),
        ("bn", nn.BatchNorm2d(out_channels)),
    ]))


class ResidualUnit(nn.Module):
    """Bottleneck residual unit: 1x1 -> 3x3 (strided) -> 1x1, plus identity or projection shortcut."""

    def __init__(self, kind: str, in_channels: int, out_channels: int, stride: int = 1):
        super().__init__()
        if kind not in (SKIP, PROJECTION):
            raise ConfigurationError(f"unknown residual unit kind '{kind}'", field="kind")
        if kind == SKIP and (in_channels != out_channels or stride != 1):
            raise ConfigurationError(
                f"skip unit needs in == out channels and stride 1, got {in_channels}->{out_channels} stride {stride}",
                field="kind",
            )
        self.kind = kind
        self.stride = stride
        self.out_channels = out_channels
        mid = max(out_channels // 4, 1)
        self.main = nn.Sequential(collections.OrderedDict([
            ("reduce", conv_bn(in_channels, mid, kernel_size=1, padding=0)),
            ("relu1", nn.ReLU(inplace=True)),
            ("conv", conv_bn(mid, mid, kernel_size=3, stride=stride, padding=1)),
            ("relu2", nn.ReLU(inplace=True)),
            ("expand", conv_bn(mid, out_channels, kernel_size=1, padding=0)),
        ]))
        self.shortcut = (
            nn.Identity() if kind == SKIP
            else conv_bn(in_channels, out_channels, kernel_size=1, stride=stride, padding=0)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return F.relu(self.main(x) + self.shortcut(x))

    def output_spec(self, spec: TensorSpec) -> TensorSpec:
        return TensorSpec(
            height=(spec.height - 1) // self.stride + 1,
            width=(spec.width - 1) // self.stride + 1,
            channels=self.out_channels,
        )


def residual_unit(kind: str, in_channels: int, out_channels: int, stride: int = 1) -> ResidualUnit:
    return ResidualUnit(kind, in_channels, out_channels, stride)


def interleave(a: torch.Tensor, b: torch.Tensor, c: torch.Tensor, d: torch.Tensor) -> torch.Tensor:
    """Four N x C x H x W maps -> N x C x 2H x 2W with a, b, c, d at offsets (0,0), (0,1), (1,0), (1,1)."""
    n, channels, height, width = a.shape
    stacked = torch.stack([a, b, c, d], dim=2).reshape(n, channels * 4, height, width)
    return F.pixel_shuffle(stacked, 2)


class InterleavedConvs(nn.Module):
    """3x3, 2x3, 3x2 and 2x2 convolutions whose outputs are interleaved to double the resolution."""

    # F.pad order: (left, right, top, bottom)
    PADDINGS = ((1, 1, 1, 1), (1, 1, 0, 1), (0, 1, 1, 1), (0, 1, 0, 1))
    KERNELS = ((3, 3), (2, 3), (3, 2), (2, 2))

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.convs = nn.ModuleList(
            conv_bn(in_channels, out_channels, kernel_size=k, padding=0) for k in self.KERNELS
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        outputs = [conv(F.pad(x, pad)) for conv, pad in zip(self.convs, self.PADDINGS)]
        return interleave(*outputs)


class UpSamplingBlock(nn.Module):
    """
    Up-projection block. Upper branch: interleaved convs -> ReLU -> 3x3 conv -> BN.
    Lower branch (skip role): interleaved convs. Output: ReLU of the sum.
    """

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        if in_channels < 1 or out_channels < 1:
            raise ConfigurationError(f"channels must be positive, got {in_channels}->{out_channels}", field="channels")
        self.out_channels = out_channels
        self.upper = nn.Sequential(collections.OrderedDict([
            ("interleaved", InterleavedConvs(in_channels, out_channels)),
            ("relu", nn.ReLU(inplace=True)),
            ("conv", conv_bn(out_channels, out_channels)),
        ]))
        self.lower = InterleavedConvs(in_channels, out_channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return F.relu(self.upper(x) + self.lower(x))

    def output_spec(self, spec: TensorSpec) -> TensorSpec:
        return TensorSpec(height=spec.height * 2, width=spec.width * 2, channels=self.out_channels)


def up_sampling_block(in_channels: int, out_channels: int) -> UpSamplingBlock:
    return UpSamplingBlock(in_channels, out_channels)


def sobel_edges_tensor(images: torch.Tensor) -> torch.Tensor:
    """N x 3 x H x W -> N x 1 x H x W: per-channel Sobel magnitude summed over channels."""
    gradients = kornia.filters.spatial_gradient(images, mode="sobel", order=1, normalized=False)
    magnitude = torch.sqrt(gradients[:, :, 0] ** 2 + gradients[:, :, 1] ** 2)
    return magnitude.sum(dim=1, keepdim=True)


def sobel_edges(image: Union[ImageTensor, torch.Tensor]) -> Union[np.ndarray, torch.Tensor]:
    """Edge map of an ImageTensor (H x W x 1 array) or of a batch tensor."""
    if isinstance(image, torch.Tensor):
        return sobel_edges_tensor(image)
    return chw_to_hwc(sobel_edges_tensor(hwc_to_chw(image.data)[None])[0])


def semantic_mask_tensor(images: torch.Tensor, semantic: torch.Tensor, class_index: int) -> torch.Tensor:
    if not 0 <= class_index < semantic.shape[1]:
        raise DomainError(f"class index {class_index} outside 0..{semantic.shape[1] - 1}", field="class_index")
    if images.shape[-2:] != semantic.shape[-2:]:
        raise ShapeMismatchError(
            f"image {tuple(images.shape[-2:])} and label map {tuple(semantic.shape[-2:])} differ", field="semantic"
        )
    return images * semantic[:, class_index:class_index + 1]


def semantic_mask(image: ImageTensor, label_map: SemanticLabelMap, class_index: int) -> ImageTensor:
    """Image pixels of one class, black elsewhere."""
    masked = semantic_mask_tensor(hwc_to_chw(image.data)[None], hwc_to_chw(label_map.data)[None], class_index)
    return ImageTensor(data=chw_to_hwc(masked[0]))


def semantic_edges_tensor(edges: torch.Tensor, semantic: torch.Tensor) -> torch.Tensor:
    if edges.shape[1] != 1 or edges.shape[-2:] != semantic.shape[-2:]:
        raise ShapeMismatchError(
            f"edge map {tuple(edges.shape[1:])} does not match label map {tuple(semantic.shape[1:])}", field="edges"
        )
    return edges * semantic


def semantic_edges(edges: Union[np.ndarray, torch.Tensor], label_map) -> Union[np.ndarray, torch.Tensor]:
    """Channel c = edges * m_c. Accepts (H x W x 1, SemanticLabelMap) or batch tensors."""
    if isinstance(edges, torch.Tensor):
        return semantic_edges_tensor(edges, label_map)
    out = semantic_edges_tensor(hwc_to_chw(np.asarray(edges))[None], hwc_to_chw(label_map.data)[None])
    return chw_to_hwc(out[0])
