"""3D conformer generation with a doubling retry schedule.

A molecular-mechanics energy (harmonic bonds, harmonic angle cosines,
soft-sphere repulsion between distant atom pairs) is minimized with
L-BFGS-B from a deterministic near-planar start. Attempt k gets a budget
of base_iterations * 2**(k-1) optimizer iterations and warm-starts from
the previous attempt; after max_attempts failures the planar layout is
returned as a 2D fallback. Hydrogens never appear: the molecular graph
is heavy-atom only.

The optimizer is pluggable so tests can inject counting or always-fail
stubs to pin the schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ddikit.chem.mol import Molecule, parse_smiles
from ddikit.imaging.layout import layout_2d

BASE_ITERATIONS = 5000
MAX_ATTEMPTS = 10

COVALENT_RADII = {
    "B": 0.84, "C": 0.76, "N": 0.71, "O": 0.66, "P": 1.07, "S": 1.05,
    "F": 0.57, "Cl": 1.02, "Br": 1.20, "I": 1.39, "*": 0.76,
}
_ORDER_FACTOR = {1: 1.0, 2: 0.87, 3: 0.78}
_AROMATIC_FACTOR = 0.92

_K_BOND = 100.0
_K_ANGLE = 30.0
_K_REPEL = 25.0
_REPEL_DIST = 2.2


@dataclass
class ConformerResult:
    coords: np.ndarray | None  # (N_heavy, 3)
    converged: bool
    attempts: int
    fallback_2d: bool

    def __post_init__(self):
        if self.converged and self.coords is None:
            raise ValueError("converged result must carry coordinates")
        if self.fallback_2d and (self.attempts != MAX_ATTEMPTS or self.converged):
            raise ValueError("2D fallback implies max attempts and no convergence")


def _equilibrium_length(mol: Molecule, bond) -> float:
    r = COVALENT_RADII.get(mol.atoms[bond.a1].symbol, 0.76) + COVALENT_RADII.get(
        mol.atoms[bond.a2].symbol, 0.76
    )
    if bond.aromatic:
        return r * _AROMATIC_FACTOR
    return r * _ORDER_FACTOR.get(bond.order, 1.0)


def _ideal_cos(mol: Molecule, center: int) -> float:
    orders = [b.order for _, b in mol.neighbors(center) if not b.aromatic]
    aromatic = any(b.aromatic for _, b in mol.neighbors(center))
    if 3 in orders or orders.count(2) >= 2:
        return -1.0  # linear sp
    if aromatic or 2 in orders:
        return -0.5  # trigonal sp2
    return -1.0 / 3.0  # tetrahedral sp3


class _EnergyModel:
    def __init__(self, mol: Molecule):
        self.n = mol.num_atoms
        self.bonds = [
            (b.a1, b.a2, _equilibrium_length(mol, b)) for b in mol.bonds
        ]
        self.angles = []
        for j in range(self.n):
            nbrs = [i for i, _ in mol.neighbors(j)]
            cos0 = _ideal_cos(mol, j)
            for x in range(len(nbrs)):
                for y in range(x + 1, len(nbrs)):
                    self.angles.append((nbrs[x], j, nbrs[y], cos0))
        bonded = {(min(a, b), max(a, b)) for a, b, _ in self.bonds}
        onethree = {(min(a, c), max(a, c)) for a, _, c, _ in self.angles}
        self.pairs = [
            (i, j)
            for i in range(self.n)
            for j in range(i + 1, self.n)
            if (i, j) not in bonded and (i, j) not in onethree
        ]

    def value_and_grad(self, flat: np.ndarray) -> tuple[float, np.ndarray]:
        x = flat.reshape(self.n, 3)
        grad = np.zeros_like(x)
        energy = 0.0

        for a, b, r0 in self.bonds:
            d = x[a] - x[b]
            r = np.linalg.norm(d) + 1e-12
            diff = r - r0
            energy += _K_BOND * diff * diff
            g = 2 * _K_BOND * diff * d / r
            grad[a] += g
            grad[b] -= g

        for a, b, c, cos0 in self.angles:
            u = x[a] - x[b]
            v = x[c] - x[b]
            nu = np.linalg.norm(u) + 1e-12
            nv = np.linalg.norm(v) + 1e-12
            cosq = float(u @ v) / (nu * nv)
            diff = cosq - cos0
            energy += _K_ANGLE * diff * diff
            dc_du = v / (nu * nv) - cosq * u / (nu * nu)
            dc_dv = u / (nu * nv) - cosq * v / (nv * nv)
            grad[a] += 2 * _K_ANGLE * diff * dc_du
            grad[c] += 2 * _K_ANGLE * diff * dc_dv
            grad[b] -= 2 * _K_ANGLE * diff * (dc_du + dc_dv)

        for i, j in self.pairs:
            d = x[i] - x[j]
            r = np.linalg.norm(d) + 1e-12
            if r < _REPEL_DIST:
                gap = _REPEL_DIST - r
                energy += _K_REPEL * gap * gap
                g = -2 * _K_REPEL * gap * d / r
                grad[i] += g
                grad[j] -= g

        return energy, grad.ravel()


class ForceFieldOptimizer:
    """Default geometry optimizer backed by scipy L-BFGS-B."""

    def optimize(
        self, mol: Molecule, coords: np.ndarray, max_iterations: int
    ) -> tuple[np.ndarray, bool]:
        from scipy.optimize import minimize

        model = _EnergyModel(mol)
        res = minimize(
            model.value_and_grad,
            coords.ravel(),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": max_iterations, "gtol": 1e-6},
        )
        return res.x.reshape(-1, 3), bool(res.success)


def _initial_coords(mol: Molecule) -> np.ndarray:
    """Planar layout scaled to bond-length units, with a deterministic
    out-of-plane kick so the optimizer can leave the plane."""
    plane = layout_2d(mol) * 1.5
    z = np.array(
        [0.15 * ((i * 2654435761) % 97 / 97.0 - 0.5) for i in range(mol.num_atoms)]
    )
    return np.column_stack([plane, z])


def _planar_coords(mol: Molecule) -> np.ndarray:
    plane = layout_2d(mol) * 1.5
    return np.column_stack([plane, np.zeros(mol.num_atoms)])


def generate_conformer(
    smiles: str,
    optimizer: ForceFieldOptimizer | None = None,
    base_iterations: int = BASE_ITERATIONS,
    max_attempts: int = MAX_ATTEMPTS,
) -> ConformerResult:
    """Optimize a 3D conformer, doubling the iteration budget per attempt."""
    mol = parse_smiles(smiles)
    optimizer = optimizer or ForceFieldOptimizer()
    coords = _initial_coords(mol)
    for attempt in range(1, max_attempts + 1):
        budget = base_iterations * 2 ** (attempt - 1)
        coords, ok = optimizer.optimize(mol, coords, budget)
        if ok:
            return ConformerResult(
                coords=np.asarray(coords, dtype=np.float64),
                converged=True,
                attempts=attempt,
                fallback_2d=False,
            )
    return ConformerResult(
        coords=_planar_coords(mol),
        converged=False,
        attempts=max_attempts,
        fallback_2d=True,
    )
