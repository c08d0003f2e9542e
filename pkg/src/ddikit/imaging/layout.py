"""Deterministic 2D coordinates for depiction and conformer seeding.

Kamada-Kawai layout on the molecular graph: no randomness, so the same
molecule always lands on the same coordinates. Coordinates are rescaled
so the median bond length is 1.0.
"""

from __future__ import annotations

import numpy as np

from ddikit.chem.mol import Molecule


def layout_2d(mol: Molecule) -> np.ndarray:
    """(N, 2) float64 coordinates, median bond length 1."""
    import networkx as nx

    n = mol.num_atoms
    if n == 1:
        return np.zeros((1, 2))
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from((b.a1, b.a2) for b in mol.bonds)

    pos = np.zeros((n, 2))
    offset = 0.0
    for comp in mol.components():
        if len(comp) == 1:
            pos[comp[0]] = (offset, 0.0)
            offset += 2.0
            continue
        sub = g.subgraph(comp)
        placed = nx.kamada_kawai_layout(sub)
        coords = np.array([placed[i] for i in comp])
        lengths = [
            np.linalg.norm(placed[b.a1] - placed[b.a2])
            for b in mol.bonds
            if b.a1 in placed and b.a2 in placed
        ]
        scale = np.median(lengths) if lengths else 1.0
        if scale > 1e-9:
            coords = coords / scale
        coords[:, 0] += offset - coords[:, 0].min()
        for k, i in enumerate(comp):
            pos[i] = coords[k]
        offset = pos[comp, 0].max() + 2.0
    return pos
