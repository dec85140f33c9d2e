from enum import Enum
from typing import Optional, Tuple
import torch
from pydantic import BaseModel, Field, ConfigDict, model_validator

from src.models.sample import DepthMap, SemanticLabelMap

INPUT_MULTIPLE = 32


class Variant(str, Enum):
    """Depth network family members plus the segmentation U-Net."""
    M0 = "M0"
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"
    M5 = "M5"
    M6 = "M6"
    M7 = "M7"
    M18 = "M18"
    M19 = "M19"
    M20 = "M20"
    M21 = "M21"
    UNET = "UNET"


# Variants consuming a semantic label map at inference.
SEMANTIC_INPUT_VARIANTS = {
    Variant.M1, Variant.M2, Variant.M3, Variant.M4, Variant.M5, Variant.M7, Variant.M18, Variant.M21,
}

# Variants with per-class semantic decoders.
SEMANTIC_DECODER_VARIANTS = {Variant.M2, Variant.M3, Variant.M4, Variant.M5}

# Slim variant -> the variant whose input it shares.
SLIM_OF = {Variant.M18: Variant.M7, Variant.M19: Variant.M6, Variant.M20: Variant.M0, Variant.M21: Variant.M1}


class ModelSpec(BaseModel):
    """Declarative description of one network; persisted as spec.json in checkpoints."""
    variant: Variant
    input_size: Tuple[int, int] = Field((64, 64), description="(width, height), each divisible by 32.")
    n_classes: int = Field(11, ge=0, description="Semantic classes (channels of label inputs/outputs).")
    width_scale: float = Field(1.0, gt=0.0, le=1.0, description="Channel multiplier; 1.0 is the registered full width.")
    seed: int = 0

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"variant": "M21", "input_size": [1216, 352], "n_classes": 11, "width_scale": 1.0, "seed": 0}
        },
    )

    @model_validator(mode="after")
    def _check_spec(self):
        w, h = self.input_size
        if w <= 0 or h <= 0 or w % INPUT_MULTIPLE or h % INPUT_MULTIPLE:
            raise ValueError(f"input_size {w}x{h} must be positive multiples of {INPUT_MULTIPLE}")
        if (self.uses_semantic or self.is_segmenter) and self.n_classes < 1:
            raise ValueError(f"variant {self.variant.value} needs n_classes >= 1")
        return self

    @property
    def uses_semantic(self) -> bool:
        return self.variant in SEMANTIC_INPUT_VARIANTS

    @property
    def has_semantic_decoders(self) -> bool:
        return self.variant in SEMANTIC_DECODER_VARIANTS

    @property
    def is_slim(self) -> bool:
        return self.variant in SLIM_OF

    @property
    def is_segmenter(self) -> bool:
        return self.variant == Variant.UNET

    @property
    def base_variant(self) -> Variant:
        """Input wiring of the variant (slim variants share their full sibling's)."""
        return SLIM_OF.get(self.variant, self.variant)


class ModelOutputs(BaseModel):
    """Network outputs as N x C x H x W tensors."""
    depth: Optional[torch.Tensor] = Field(None, description="N x 1 x H x W meters; every depth variant.")
    semantic_depth: Optional[torch.Tensor] = Field(None, description="N x n x H x W per-class depth (M2-M5).")
    segmentation: Optional[torch.Tensor] = Field(None, description="N x n x H x W softmax (UNET).")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def depth_map(self, index: int = 0) -> DepthMap:
        return DepthMap(values=self.depth[index, 0].detach().cpu().numpy())

    def segmentation_map(self, index: int = 0, registry=None) -> SemanticLabelMap:
        """Argmax-binarized one-hot map of one batch element."""
        probs = self.segmentation[index].detach().cpu()
        onehot = torch.nn.functional.one_hot(probs.argmax(dim=0), probs.shape[0]).numpy()
        return SemanticLabelMap(data=onehot, registry=registry)
