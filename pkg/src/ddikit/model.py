"""Full pair classifier: image encoders -> fusion transformer -> head.

One model covers one image modality. Fusion and head are constructed
before the backbone so that models differing only in modality draw
identical initial weights for the shared trunk from the same seed; the
image-free variant simply has no backbone and no attention bias.
"""

from __future__ import annotations

import torch
from torch import nn

from ddikit.encoders import (
    ImageNormalizer,
    ResNet18Backbone,
    TinyConvBackbone,
    encode_image_2d,
    encode_views_3d,
    pair_visual,
)
from ddikit.errors import ConfigError
from ddikit.fusion import FusionConfig, PairFusionEncoder
from ddikit.predictor import PredictionHead

MODALITIES = ("2d", "3d", "none")


def make_backbone(name: str) -> nn.Module:
    if name == "resnet18":
        return ResNet18Backbone()
    if name == "tiny":
        return TinyConvBackbone(out_dim=8)
    raise ConfigError(f"unknown backbone {name!r}")


class DdiModel(nn.Module):
    def __init__(
        self,
        config: FusionConfig,
        modality: str = "none",
        backbone_name: str = "resnet18",
    ):
        super().__init__()
        if modality not in MODALITIES:
            raise ConfigError(f"modality must be one of {MODALITIES}, got {modality!r}")
        self.modality = modality
        self.config = config
        self.fusion = PairFusionEncoder(config)
        self.head = PredictionHead(config.hidden, config.num_classes)
        if modality == "none":
            self.backbone = None
            self.normalizer = None
        else:
            self.backbone = make_backbone(backbone_name)
            self.normalizer = ImageNormalizer()
            expected = 2 * self.backbone.out_dim
            if config.visual_dim != expected:
                raise ConfigError(
                    f"visual_dim {config.visual_dim} does not match twice the "
                    f"backbone width ({expected})"
                )

    def visual_embedding(
        self, images_x: torch.Tensor, images_y: torch.Tensor
    ) -> torch.Tensor:
        """Per-pair 2*out_dim visual embedding for the active modality."""
        if self.modality == "2d":
            ix = encode_image_2d(self.normalizer(images_x), self.backbone)
            iy = encode_image_2d(self.normalizer(images_y), self.backbone)
        elif self.modality == "3d":
            ix = encode_views_3d(self._norm_views(images_x), self.backbone)
            iy = encode_views_3d(self._norm_views(images_y), self.backbone)
        else:
            raise ConfigError("image-free model has no visual embedding")
        return pair_visual(ix, iy)

    def _norm_views(self, views: torch.Tensor) -> torch.Tensor:
        if views.dim() == 4:
            views = views.unsqueeze(0)
        b, f = views.shape[0], views.shape[1]
        flat = views.reshape(b * f, *views.shape[2:])
        return self.normalizer(flat).reshape(views.shape)

    def forward(
        self,
        token_ids: torch.Tensor,
        segment_ids: torch.Tensor,
        key_mask: torch.Tensor,
        images_x: torch.Tensor | None = None,
        images_y: torch.Tensor | None = None,
        return_attention: bool = False,
    ):
        """-> (B, num_classes) logits; optionally per-layer attention maps."""
        visual = None
        if self.modality != "none":
            if images_x is None or images_y is None:
                raise ConfigError(f"modality {self.modality} requires image inputs")
            visual = self.visual_embedding(images_x, images_y)
        out = self.fusion(
            token_ids, segment_ids, key_mask, visual, return_attention=return_attention
        )
        if return_attention:
            pooled, attn = out
            return self.head(pooled), attn
        return self.head(out)

    def pair_representation(
        self,
        token_ids: torch.Tensor,
        segment_ids: torch.Tensor,
        key_mask: torch.Tensor,
        images_x: torch.Tensor | None = None,
        images_y: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Pooled (B, d) representations without the classification head."""
        visual = None
        if self.modality != "none" and images_x is not None:
            visual = self.visual_embedding(images_x, images_y)
        return self.fusion(token_ids, segment_ids, key_mask, visual)
