"""
Segmentation U-Net: five pooling steps, zero-padded 3x3 convolutions each
followed by batch norm, batch norm after every skip concatenation, transposed
convolutions for up-sampling and a softmax over classes.
"""
import collections

import torch
import torch.nn as nn

from src.models.network import ModelOutputs, ModelSpec

BASE_WIDTHS = (64, 128, 256, 512, 1024)
MAX_WIDTH = 1024
MIN_WIDTH = 4


def double_conv(in_channels: int, out_channels: int) -> nn.Sequential:
    return nn.Sequential(collections.OrderedDict([
        ("conv1", nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1, bias=False)),
        ("bn1", nn.BatchNorm2d(out_channels)),
        ("relu1", nn.ReLU(inplace=True)),
        ("conv2", nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1, bias=False)),
        ("bn2", nn.BatchNorm2d(out_channels)),
        ("relu2", nn.ReLU(inplace=True)),
    ]))


class UpStep(nn.Module):
    def __init__(self, in_channels: int, skip_channels: int, out_channels: int):
        super().__init__()
        self.up = nn.ConvTranspose2d(in_channels, out_channels, kernel_size=2, stride=2, bias=False)
        self.concat_bn = nn.BatchNorm2d(out_channels + skip_channels)
        self.conv = double_conv(out_channels + skip_channels, out_channels)

    def forward(self, x: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        x = torch.cat([skip, self.up(x)], dim=1)
        return self.conv(self.concat_bn(x))


class UNet(nn.Module):
    def __init__(self, spec: ModelSpec, in_channels: int = 3):
        super().__init__()
        self.spec = spec
        widths = [min(max(int(round(w * spec.width_scale)), MIN_WIDTH), MAX_WIDTH) for w in BASE_WIDTHS]
        bottom = min(max(int(round(2 * BASE_WIDTHS[-1] * spec.width_scale)), MIN_WIDTH), MAX_WIDTH)

        self.down = nn.ModuleList()
        channels = in_channels
        for w in widths:
            self.down.append(double_conv(channels, w))
            channels = w
        self.pool = nn.MaxPool2d(2)
        self.bottom = double_conv(channels, bottom)

        self.up = nn.ModuleList()
        channels = bottom
        for w in reversed(widths):
            self.up.append(UpStep(channels, w, w))
            channels = w
        self.classify = nn.Conv2d(channels, spec.n_classes, kernel_size=1)

    def forward(self, image: torch.Tensor, semantic: torch.Tensor = None) -> ModelOutputs:
        skips = []
        x = image
        for block in self.down:
            x = block(x)
            skips.append(x)
            x = self.pool(x)
        x = self.bottom(x)
        for step, skip in zip(self.up, reversed(skips)):
            x = step(x, skip)
        return ModelOutputs(segmentation=torch.softmax(self.classify(x), dim=1))
