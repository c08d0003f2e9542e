"""2D molecular images and training-time augmentation.

The default artist draws a line depiction: bonds as fixed-width lines
(doubled/tripled for higher orders), heteroatom element labels in the
PIL built-in bitmap font, carbon left bare. Everything that influences
pixels lives in RenderParams and is hashed into the scheme id, so equal
(smiles, params) always yields bit-identical arrays.

Augmentation applies, in order: center crop, 50% horizontal flip, 20%
grayscale, rotation by a whole degree drawn uniformly from 0..359.
Random cropping is deliberately absent: molecular drawings are mostly
background and content sits center-frame.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from ddikit.chem.mol import Molecule, parse_smiles
from ddikit.errors import RenderFailure, ShapeMismatch
from ddikit.imaging.layout import layout_2d

ELEMENT_COLORS = {
    "N": (48, 80, 248),
    "O": (255, 13, 13),
    "S": (255, 200, 50),
    "P": (255, 128, 0),
    "F": (144, 224, 80),
    "Cl": (31, 240, 31),
    "Br": (166, 41, 41),
    "I": (148, 0, 148),
    "*": (102, 102, 102),
}

FLIP_PROBABILITY = 0.5
GRAYSCALE_PROBABILITY = 0.2


@dataclass(frozen=True)
class RenderParams:
    canvas_size: int = 256
    output_size: int = 224
    background: tuple[int, int, int] = (255, 255, 255)
    bond_color: tuple[int, int, int] = (0, 0, 0)
    bond_width: int = 2
    margin: float = 0.12

    def scheme_id(self) -> str:
        blob = json.dumps(self.__dict__, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Image2D:
    pixels: np.ndarray  # (H, W, 3) uint8
    render_params: RenderParams = field(default_factory=RenderParams)

    @property
    def size(self) -> int:
        return self.pixels.shape[0]


class LineArtist:
    """Default deterministic 2D depiction backend."""

    def draw(self, mol: Molecule, params: RenderParams) -> np.ndarray:
        size = params.canvas_size
        img = Image.new("RGB", (size, size), params.background)
        draw = ImageDraw.Draw(img)
        coords = layout_2d(mol)
        pts = _to_canvas(coords, size, params.margin)
        font = ImageFont.load_default()

        for bond in mol.bonds:
            p, q = pts[bond.a1], pts[bond.a2]
            if bond.aromatic or bond.order == 1:
                _line(draw, p, q, params.bond_color, params.bond_width)
                if bond.aromatic:
                    _line(draw, *_offset(p, q, 3), params.bond_color, 1)
            elif bond.order == 2:
                _line(draw, *_offset(p, q, 2), params.bond_color, params.bond_width)
                _line(draw, *_offset(p, q, -2), params.bond_color, params.bond_width)
            else:
                _line(draw, p, q, params.bond_color, params.bond_width)
                _line(draw, *_offset(p, q, 3), params.bond_color, params.bond_width)
                _line(draw, *_offset(p, q, -3), params.bond_color, params.bond_width)

        for i, atom in enumerate(mol.atoms):
            if atom.symbol == "C" and atom.charge == 0 and not atom.isotope:
                continue
            label = atom.symbol if atom.symbol != "*" else "*"
            if atom.charge:
                label += "+" if atom.charge > 0 else "-"
            color = ELEMENT_COLORS.get(atom.symbol, (0, 0, 0))
            x, y = pts[i]
            w = 4 * len(label)
            draw.rectangle((x - w, y - 5, x + w, y + 6), fill=params.background)
            draw.text((x, y), label, fill=color, font=font, anchor="mm")

        return np.asarray(img, dtype=np.uint8)


def _to_canvas(coords: np.ndarray, size: int, margin: float) -> np.ndarray:
    span = coords.max(axis=0) - coords.min(axis=0)
    extent = max(span.max(), 1e-6)
    usable = size * (1 - 2 * margin)
    scale = usable / extent
    centered = (coords - (coords.min(axis=0) + span / 2)) * scale
    centered[:, 1] *= -1  # image y grows downward
    return centered + size / 2


def _line(draw, p, q, color, width) -> None:
    draw.line((float(p[0]), float(p[1]), float(q[0]), float(q[1])), fill=color, width=width)


def _offset(p, q, shift: float):
    d = np.array([q[1] - p[1], p[0] - q[0]], dtype=float)
    norm = np.linalg.norm(d)
    if norm < 1e-9:
        return p, q
    d = d / norm * shift
    return p + d, q + d


def render_2d(
    smiles: str, params: RenderParams | None = None, artist: LineArtist | None = None
) -> Image2D:
    """Deterministic square 2D image for a molecule."""
    params = params or RenderParams()
    artist = artist or LineArtist()
    mol = parse_smiles(smiles)
    try:
        pixels = artist.draw(mol, params)
    except Exception as err:  # artist backends may fail on odd geometry
        raise RenderFailure(f"2D rendering failed for {smiles!r}: {err}") from err
    if pixels.shape != (params.canvas_size, params.canvas_size, 3):
        raise RenderFailure(
            f"artist produced shape {pixels.shape}, expected square canvas"
        )
    return Image2D(pixels=pixels, render_params=params)


def center_crop(image: Image2D, size: int) -> Image2D:
    h, w = image.pixels.shape[:2]
    if size > min(h, w):
        raise ShapeMismatch(f"crop {size} larger than image {h}x{w}")
    top = (h - size) // 2
    left = (w - size) // 2
    return Image2D(image.pixels[top : top + size, left : left + size], image.render_params)


def draw_augment_ops(rng_seed: int) -> tuple[bool, bool, int]:
    """The augmentation decisions one seed produces: (flip, grayscale, angle).

    Angle is a whole degree drawn uniformly from 0..359, so the identity
    path (no flip, no grayscale, zero rotation) is reachable.
    """
    rng = np.random.default_rng(rng_seed)
    flip = bool(rng.random() < FLIP_PROBABILITY)
    gray = bool(rng.random() < GRAYSCALE_PROBABILITY)
    angle = int(rng.integers(0, 360))
    return flip, gray, angle


def augment_2d(image: Image2D, rng_seed: int) -> Image2D:
    """Seeded augmentation pipeline; output is output_size square uint8."""
    h, w = image.pixels.shape[:2]
    if h != w:
        raise ShapeMismatch(f"augment_2d expects a square image, got {h}x{w}")
    params = image.render_params
    out = center_crop(image, min(params.output_size, h))
    flip, gray, angle = draw_augment_ops(rng_seed)

    pix = out.pixels
    if flip:
        pix = pix[:, ::-1, :]
    if gray:
        level = np.round(
            0.299 * pix[..., 0] + 0.587 * pix[..., 1] + 0.114 * pix[..., 2]
        ).astype(np.uint8)
        pix = np.repeat(level[..., None], 3, axis=2)
    if angle != 0:
        pil = Image.fromarray(np.ascontiguousarray(pix))
        pil = pil.rotate(
            angle, resample=Image.BILINEAR, fillcolor=tuple(params.background)
        )
        pix = np.asarray(pil, dtype=np.uint8)
    return Image2D(np.ascontiguousarray(pix), params)
