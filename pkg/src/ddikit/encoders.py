"""Image encoders: single-image 2D features and mean-pooled 3D views.

The production backbone is an 18-layer residual network with global
average pooling (512-d output) built from torchvision with random
initialization; `load_backbone_weights` accepts externally pretrained
state dicts. 2D and 3D paths hold separate weights unless configured to
share. A tiny convolutional backbone is provided for numeric tests.
"""

from __future__ import annotations

import torch
from torch import nn

from ddikit.errors import ShapeMismatch

EMBED_DIM = 512
IMAGE_SIZE = 224


class ResNet18Backbone(nn.Module):
    """Residual conv net, fc head removed; forward gives (B, 512)."""

    out_dim = EMBED_DIM

    def __init__(self):
        super().__init__()
        from torchvision.models import resnet18

        net = resnet18(weights=None)
        net.fc = nn.Identity()
        self.net = net

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)

    def cam_layer(self) -> nn.Module:
        """Final convolutional stage, the Grad-CAM target."""
        return self.net.layer4


class TinyConvBackbone(nn.Module):
    """Small conv + pool + linear stack for hand-checkable tests."""

    def __init__(self, out_dim: int = 4, channels: int = 2):
        super().__init__()
        self.out_dim = out_dim
        self.conv = nn.Conv2d(3, channels, kernel_size=1)
        self.fc = nn.Linear(channels, out_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = torch.relu(self.conv(x))
        h = h.mean(dim=(2, 3))
        return self.fc(h)

    def cam_layer(self) -> nn.Module:
        return self.conv


class ImageNormalizer(nn.Module):
    """Per-channel standardization with dataset statistics kept as buffers."""

    def __init__(self, mean=(0.5, 0.5, 0.5), std=(0.25, 0.25, 0.25)):
        super().__init__()
        self.register_buffer("mean", torch.tensor(mean).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(std).view(1, 3, 1, 1))

    def set_stats(self, mean: torch.Tensor, std: torch.Tensor) -> None:
        self.mean.copy_(mean.view(1, 3, 1, 1))
        self.std.copy_(std.view(1, 3, 1, 1).clamp_min(1e-6))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return (x - self.mean) / self.std


def _check_image_batch(x: torch.Tensor, what: str) -> torch.Tensor:
    if x.dim() == 3:
        x = x.unsqueeze(0)
    if x.dim() != 4 or x.shape[1] != 3:
        raise ShapeMismatch(f"{what} expects (B, 3, H, W), got {tuple(x.shape)}")
    return x


def encode_image_2d(images: torch.Tensor, backbone: nn.Module) -> torch.Tensor:
    """(B, 3, H, W) or (3, H, W) -> (B, out_dim) embeddings."""
    batch = _check_image_batch(images, "encode_image_2d")
    return backbone(batch)


def encode_views_3d(views: torch.Tensor, backbone: nn.Module) -> torch.Tensor:
    """(B, 10, 3, H, W) or (10, 3, H, W) -> per-molecule mean of frame embeddings."""
    if views.dim() == 4:
        views = views.unsqueeze(0)
    if views.dim() != 5 or views.shape[2] != 3:
        raise ShapeMismatch(
            f"encode_views_3d expects (B, F, 3, H, W), got {tuple(views.shape)}"
        )
    b, f = views.shape[0], views.shape[1]
    flat = views.reshape(b * f, *views.shape[2:])
    emb = backbone(flat)
    return emb.reshape(b, f, -1).mean(dim=1)


def pair_visual(ix: torch.Tensor, iy: torch.Tensor) -> torch.Tensor:
    """Concatenated pair embedding: first drug's features, then second's."""
    if ix.shape != iy.shape:
        raise ShapeMismatch(f"embedding shapes differ: {tuple(ix.shape)} vs {tuple(iy.shape)}")
    return torch.cat([ix, iy], dim=-1)


def load_backbone_weights(backbone: nn.Module, path: str) -> None:
    """Hook for externally pretrained weights."""
    state = torch.load(path, map_location="cpu", weights_only=True)
    backbone.load_state_dict(state)
