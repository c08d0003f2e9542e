"""Molecular depiction: 2D images, 3D conformers, multi-view frame stacks."""

from ddikit.imaging.render2d import Image2D, RenderParams, augment_2d, render_2d
from ddikit.imaging.conformer import (
    ConformerResult,
    ForceFieldOptimizer,
    generate_conformer,
)
from ddikit.imaging.render3d import (
    MoleculeViews3D,
    load_views,
    render_3d_views,
    save_views,
)

__all__ = [
    "Image2D",
    "RenderParams",
    "render_2d",
    "augment_2d",
    "ConformerResult",
    "ForceFieldOptimizer",
    "generate_conformer",
    "MoleculeViews3D",
    "render_3d_views",
    "save_views",
    "load_views",
]
