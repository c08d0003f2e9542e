"""Ring membership and aromaticity perception.

Ring bonds are exactly the non-bridge edges of the graph, found with a
single DFS (Tarjan bridge finding). Ring enumeration for aromaticity
uses a cycle basis built from the DFS spanning tree, which is adequate
for molecular graphs.

Aromaticity perception upgrades Kekule rings to flagged aromatic form.
The model is deliberately simple: a candidate ring of size 5-7 whose
atoms are all C/N/O/S is aromatic when every atom is sp2-capable and
the Hueckel pi-electron count over the ring is 4n+2. Contributions:

    atom with a double or aromatic bond inside the ring   -> 1
    C with an exocyclic double bond (e.g. ring C=O)       -> 0
    N/O/S contributing a lone pair (no ring double bond)  -> 2
    anything else                                         -> not aromatic

Fused systems are handled by iterating to a fixpoint so that, e.g., the
five-membered ring of indole aromatizes once the benzo ring has.
Exotic envelopes (azulene written in Kekule form) are out of model.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ddikit.chem.mol import Molecule

MAX_AROMATIC_RING = 7
MIN_AROMATIC_RING = 5


def ring_bond_indices(mol: "Molecule") -> set[int]:
    """Indices of bonds that sit on at least one cycle (non-bridges)."""
    n = mol.num_atoms
    visited = [False] * n
    disc = [0] * n
    low = [0] * n
    bridges: set[int] = set()
    timer = 0

    for root in range(n):
        if visited[root]:
            continue
        # iterative Tarjan: stack of (atom, parent bond index, neighbor iterator)
        stack = [(root, -1, iter(mol._adj[root]))]
        visited[root] = True
        disc[root] = low[root] = timer
        timer += 1
        while stack:
            u, pbond, it = stack[-1]
            advanced = False
            for bidx in it:
                bond = mol.bonds[bidx]
                v = bond.other(u)
                if bidx == pbond:
                    continue
                if visited[v]:
                    low[u] = min(low[u], disc[v])
                else:
                    visited[v] = True
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append((v, bidx, iter(mol._adj[v])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.add(pbond)

    # in a simple graph, every non-bridge edge lies on a cycle
    return {i for i in range(len(mol.bonds)) if i not in bridges}


def cycle_basis(mol: "Molecule") -> list[list[int]]:
    """Small cycles (as atom-index lists) covering the ring systems.

    Uses networkx's cycle_basis on the molecular graph; molecules are tiny
    so the generic routine is fine. Each cycle is returned in traversal
    order (consecutive entries bonded, last bonded to first).
    """
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(range(mol.num_atoms))
    g.add_edges_from((b.a1, b.a2) for b in mol.bonds)
    return [cyc for cyc in nx.cycle_basis(g)]


def perceive_aromaticity(mol: "Molecule") -> None:
    """Flag Kekule aromatic rings in place (atoms and ring bonds)."""
    candidates = [
        cyc
        for cyc in cycle_basis(mol)
        if MIN_AROMATIC_RING <= len(cyc) <= MAX_AROMATIC_RING
    ]
    if not candidates:
        return

    changed = True
    while changed:
        changed = False
        for cyc in candidates:
            if _ring_is_flagged(mol, cyc):
                continue
            if _hueckel_aromatic(mol, cyc):
                _flag_ring(mol, cyc)
                changed = True


def _ring_edges(cyc: list[int]) -> list[tuple[int, int]]:
    return [(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))]


def _ring_is_flagged(mol: "Molecule", cyc: list[int]) -> bool:
    return all(mol.atoms[i].aromatic for i in cyc) and all(
        (b := mol.bond_between(i, j)) is not None and b.aromatic for i, j in _ring_edges(cyc)
    )


def _hueckel_aromatic(mol: "Molecule", cyc: list[int]) -> bool:
    pos = {a: k for k, a in enumerate(cyc)}
    n = len(cyc)
    pi = 0
    for i in cyc:
        atom = mol.atoms[i]
        if atom.symbol not in ("C", "N", "O", "S"):
            return False
        in_cycle_double = False
        exo_double = False
        for j, bond in mol.neighbors(i):
            if bond.order >= 3:
                return False
            if bond.order != 2 and not bond.aromatic:
                continue
            adjacent_in_cycle = j in pos and abs(pos[i] - pos[j]) in (1, n - 1)
            if adjacent_in_cycle:
                in_cycle_double = True
            else:
                exo_double = True
        if in_cycle_double:
            pi += 1
        elif atom.symbol == "C":
            if not exo_double:
                return False  # sp3 carbon breaks conjugation
            # carbonyl-style carbon: sp2-capable, contributes no electrons
        elif exo_double:
            return False  # N/O/S double-bonded outward cannot donate the pair
        else:
            pi += 2  # heteroatom lone pair
    return pi >= 2 and (pi - 2) % 4 == 0


def _flag_ring(mol: "Molecule", cyc: list[int]) -> None:
    for i in cyc:
        mol.atoms[i].aromatic = True
    for i, j in _ring_edges(cyc):
        bond = mol.bond_between(i, j)
        if bond is not None:
            bond.aromatic = True
            bond.order = 1
