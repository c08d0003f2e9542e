"""Multi-view 3D frame stacks.

Ten frames per molecule: frame i rotates the centered conformer by
i * 36 degrees simultaneously about x, y and z (the axis schedule is a
renderer parameter). Each raw frame is drawn stick-and-ball at 640x480
with painter's-algorithm depth ordering, letterboxed to 640x640 with the
background color, bilinearly resized to 224x224 and scaled into [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ddikit.chem.mol import Molecule, parse_smiles
from ddikit.errors import RenderFailure, ShapeMismatch
from ddikit.imaging.conformer import ConformerResult

NUM_FRAMES = 10
RAW_SIZE = (640, 480)  # (W, H)
SQUARE_SIZE = 640
OUT_SIZE = 224

CPK_COLORS = {
    "C": (120, 120, 120),
    "N": (48, 80, 248),
    "O": (255, 13, 13),
    "S": (255, 200, 50),
    "P": (255, 128, 0),
    "F": (144, 224, 80),
    "Cl": (31, 240, 31),
    "Br": (166, 41, 41),
    "I": (148, 0, 148),
    "B": (255, 181, 181),
    "*": (80, 80, 80),
}

BALL_RADII = {
    "C": 0.32, "N": 0.30, "O": 0.28, "S": 0.40, "P": 0.40,
    "F": 0.26, "Cl": 0.38, "Br": 0.42, "I": 0.46, "B": 0.34, "*": 0.30,
}


@dataclass
class MoleculeViews3D:
    frames: np.ndarray  # (10, 3, 224, 224) float32 in [0, 1]

    def __post_init__(self):
        if self.frames.shape != (NUM_FRAMES, 3, OUT_SIZE, OUT_SIZE):
            raise ShapeMismatch(
                f"expected ({NUM_FRAMES}, 3, {OUT_SIZE}, {OUT_SIZE}), got {self.frames.shape}"
            )


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    rx = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    ry = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    rz = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    return rz @ ry @ rx


class StickBallRenderer:
    """Offscreen PIL stick-and-ball backend."""

    def __init__(self, background: tuple[int, int, int] = (255, 255, 255)):
        self.background = background

    def scheme_id(self) -> str:
        import hashlib
        import json

        blob = json.dumps(
            {
                "background": self.background,
                "raw": RAW_SIZE,
                "square": SQUARE_SIZE,
                "out": OUT_SIZE,
                "colors": sorted(CPK_COLORS.items()),
                "radii": sorted(BALL_RADII.items()),
            }
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def draw_frame(self, mol: Molecule, coords: np.ndarray) -> Image.Image:
        w, h = RAW_SIZE
        img = Image.new("RGB", (w, h), self.background)
        draw = ImageDraw.Draw(img)

        radius = np.linalg.norm(coords, axis=1).max() if len(coords) else 0.0
        usable = min(w, h) * 0.42
        scale = usable / radius if radius > 1e-9 else usable
        xy = coords[:, :2] * scale
        xy[:, 1] *= -1
        xy += np.array([w / 2, h / 2])
        depth = coords[:, 2]

        prims: list[tuple[float, str, int, int]] = []
        for bidx, bond in enumerate(mol.bonds):
            prims.append(((depth[bond.a1] + depth[bond.a2]) / 2, "bond", bidx, 0))
        for i in range(mol.num_atoms):
            prims.append((depth[i], "atom", i, 1))
        prims.sort(key=lambda t: (t[0], t[3]))  # far to near; atoms over bonds at ties

        stick_w = max(2, int(0.10 * scale))
        for _, kind, idx, _ in prims:
            if kind == "bond":
                bond = mol.bonds[idx]
                p, q = xy[bond.a1], xy[bond.a2]
                mid = (p + q) / 2
                ca = CPK_COLORS.get(mol.atoms[bond.a1].symbol, (60, 60, 60))
                cb = CPK_COLORS.get(mol.atoms[bond.a2].symbol, (60, 60, 60))
                draw.line((*p, *mid), fill=ca, width=stick_w)
                draw.line((*mid, *q), fill=cb, width=stick_w)
            else:
                atom = mol.atoms[idx]
                r = max(3.0, BALL_RADII.get(atom.symbol, 0.3) * scale)
                color = CPK_COLORS.get(atom.symbol, (60, 60, 60))
                x, y = xy[idx]
                draw.ellipse((x - r, y - r, x + r, y + r), fill=color, outline=(30, 30, 30))
        return img


def render_3d_views(
    conformer: ConformerResult,
    smiles: str,
    renderer: StickBallRenderer | None = None,
    degrees_per_frame: float = 36.0,
) -> MoleculeViews3D:
    """Render the 10-frame stack for an optimized (or fallback) conformer."""
    if conformer.coords is None:
        raise RenderFailure("conformer carries no coordinates")
    renderer = renderer or StickBallRenderer()
    mol = parse_smiles(smiles)
    if len(conformer.coords) != mol.num_atoms:
        raise RenderFailure(
            f"conformer has {len(conformer.coords)} atoms, molecule {mol.num_atoms}"
        )
    centered = conformer.coords - conformer.coords.mean(axis=0)

    frames = np.empty((NUM_FRAMES, 3, OUT_SIZE, OUT_SIZE), dtype=np.float32)
    for i in range(NUM_FRAMES):
        rot = _rotation(np.deg2rad(i * degrees_per_frame))
        raw = renderer.draw_frame(mol, centered @ rot.T)
        square = Image.new("RGB", (SQUARE_SIZE, SQUARE_SIZE), renderer.background)
        square.paste(raw, (0, (SQUARE_SIZE - RAW_SIZE[1]) // 2))
        small = square.resize((OUT_SIZE, OUT_SIZE), Image.BILINEAR)
        arr = np.asarray(small, dtype=np.float32) / 255.0
        frames[i] = arr.transpose(2, 0, 1)
    return MoleculeViews3D(frames=frames)


def save_views(views: MoleculeViews3D, path: str | Path, meta: dict | None = None) -> None:
    """Persist a frame stack as .npy plus a JSON sidecar."""
    path = Path(path)
    np.save(path, views.frames)
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(meta or {}, indent=2), encoding="utf-8")


def load_views(path: str | Path) -> MoleculeViews3D:
    arr = np.load(Path(path).with_suffix(".npy"))
    return MoleculeViews3D(frames=arr.astype(np.float32))
