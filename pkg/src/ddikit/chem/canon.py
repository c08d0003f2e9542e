"""Canonical atom ranking and SMILES output.

Ranking is Morgan-style iterative partition refinement over atom
invariants (element, aromatic flag, charge, isotope, hydrogen count,
degree, ring membership) followed by neighbor-rank refinement. Residual
ties are broken by trial individuation: each member of the lowest tied
class is provisionally promoted, the partition is re-refined, and the
candidate whose refined partition has the smallest order-independent
signature wins. For molecular graphs this yields a ranking invariant
under input atom order; symmetric ties that survive are genuine
automorphisms, for which any choice writes the same string.

The writer emits one component per DFS over the canonical ranks, with
ring-closure digits allocated lowest-free-first and reused after close.
Multi-component molecules are written as sorted dot-joined parts.
"""

from __future__ import annotations

from ddikit.chem.mol import (
    AROMATIC_SYMBOLS,
    ORGANIC_SUBSET,
    Molecule,
    infer_hydrogens,
    parse_smiles,
)


def _bond_invariant(bond) -> int:
    return 0 if bond.aromatic else bond.order


def _dense_rank(keys: list) -> list[int]:
    order = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def _refine(mol: Molecule, ranks: list[int]) -> list[int]:
    while True:
        keys = []
        for i in range(mol.num_atoms):
            nbr = sorted((_bond_invariant(b), ranks[j]) for j, b in mol.neighbors(i))
            keys.append((ranks[i], tuple(nbr)))
        new = _dense_rank(keys)
        if len(set(new)) == len(set(ranks)):
            return new
        ranks = new


def _partition_signature(mol: Molecule, ranks: list[int]) -> tuple:
    rows = []
    for i in range(mol.num_atoms):
        nbr = sorted((_bond_invariant(b), ranks[j]) for j, b in mol.neighbors(i))
        rows.append((ranks[i], mol.atoms[i].key(), tuple(nbr)))
    return tuple(sorted(rows))


def canonical_ranks(mol: Molecule) -> list[int]:
    """Distinct ranks 0..n-1, invariant under input atom permutation."""
    n = mol.num_atoms
    if n == 0:
        return []
    ring = [False] * n
    for bond in mol.bonds:
        if bond.in_ring:
            ring[bond.a1] = ring[bond.a2] = True
    # degree-major ordering starts the written string at a terminal atom
    init = [(mol.degree(i), ring[i], mol.atoms[i].key()) for i in range(n)]
    ranks = _refine(mol, _dense_rank(init))

    while len(set(ranks)) < n:
        # lowest rank class with more than one member
        by_rank: dict[int, list[int]] = {}
        for i, r in enumerate(ranks):
            by_rank.setdefault(r, []).append(i)
        tied_rank = min(r for r, members in by_rank.items() if len(members) > 1)
        members = by_rank[tied_rank]

        best_ranks = None
        best_sig = None
        for m in members:
            trial = _dense_rank([(ranks[i], 0 if i == m else 1) for i in range(n)])
            trial = _refine(mol, trial)
            sig = _partition_signature(mol, trial)
            if best_sig is None or sig < best_sig:
                best_sig = sig
                best_ranks = trial
        ranks = best_ranks
    return ranks


def _atom_token(mol: Molecule, idx: int) -> str:
    atom = mol.atoms[idx]
    symbol = atom.symbol.lower() if atom.aromatic else atom.symbol
    if atom.symbol == "*":
        if atom.isotope is None and atom.charge == 0 and atom.n_h == 0:
            return "*"
        symbol = "*"
        bare_ok = False
    else:
        bare_ok = (
            atom.symbol in ORGANIC_SUBSET
            and atom.charge == 0
            and atom.isotope is None
            and atom.atom_class is None
            and (not atom.aromatic or symbol in AROMATIC_SYMBOLS)
            and infer_hydrogens(mol, idx) == atom.n_h
        )
    if bare_ok:
        return symbol
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    if atom.n_h == 1:
        parts.append("H")
    elif atom.n_h > 1:
        parts.append(f"H{atom.n_h}")
    if atom.charge == 1:
        parts.append("+")
    elif atom.charge == -1:
        parts.append("-")
    elif atom.charge > 1:
        parts.append(f"+{atom.charge}")
    elif atom.charge < -1:
        parts.append(f"-{-atom.charge}")
    parts.append("]")
    return "".join(parts)


def _bond_token(mol: Molecule, bond) -> str:
    if bond.aromatic:
        return ""
    if bond.order == 1:
        # explicit single between two aromatic atoms (e.g. biphenyl linker)
        if mol.atoms[bond.a1].aromatic and mol.atoms[bond.a2].aromatic:
            return "-"
        return ""
    return {2: "=", 3: "#", 4: "$"}[bond.order]


def _write_component(mol: Molecule, component: list[int], prio: list[int]) -> str:
    root = min(component, key=lambda i: prio[i])

    # pass 1: preorder DFS in priority order; a neighbor already visited by
    # the time its bond is examined becomes a ring closure
    children: dict[int, list[tuple[int, object]]] = {i: [] for i in component}
    closures: dict[int, list[tuple[int, object]]] = {i: [] for i in component}
    visited = {root}
    seen_bonds = set()
    order_reached = {root: 0}
    frames = [(root, iter(sorted(mol.neighbors(root), key=lambda t: prio[t[0]])))]
    while frames:
        u, it = frames[-1]
        for v, bond in it:
            key = id(bond)
            if key in seen_bonds:
                continue
            seen_bonds.add(key)
            if v in visited:
                closures[u].append((v, bond))
                closures[v].append((u, bond))
            else:
                visited.add(v)
                children[u].append((v, bond))
                order_reached[v] = len(order_reached)
                frames.append((v, iter(sorted(mol.neighbors(v), key=lambda t: prio[t[0]]))))
                break
        else:
            frames.pop()

    # pass 2: emit, allocating closure digits in emission order
    out: list[str] = []
    digit_of: dict[int, int] = {}
    free = list(range(1, 100))
    TEXT, ATOM = 0, 1
    emit_stack: list[tuple] = [(ATOM, root, None)]
    while emit_stack:
        kind, payload, bond = emit_stack.pop()
        if kind == TEXT:
            out.append(payload)
            continue
        u = payload
        if bond is not None:
            out.append(_bond_token(mol, bond))
        out.append(_atom_token(mol, u))
        for _, cbond in sorted(closures[u], key=lambda t: order_reached[t[0]]):
            key = id(cbond)
            if key not in digit_of:
                digit_of[key] = free.pop(0)
                d = digit_of[key]
                out.append(_bond_token(mol, cbond))
            else:
                d = digit_of.pop(key)
                free.append(d)
                free.sort()
            out.append(str(d) if d < 10 else f"%{d:02d}")
        kids = children[u]
        # push in reverse so the first child is emitted first; all but the
        # last child are parenthesized
        for k in range(len(kids) - 1, -1, -1):
            v, kbond = kids[k]
            if k < len(kids) - 1:
                emit_stack.append((TEXT, ")", None))
                emit_stack.append((ATOM, v, kbond))
                emit_stack.append((TEXT, "(", None))
            else:
                emit_stack.append((ATOM, v, kbond))
    return "".join(out)


def write_smiles(mol: Molecule, priorities: list[int] | None = None) -> str:
    """Render a Molecule as SMILES following the given atom priorities.

    With `priorities=None` the canonical ranks are used, which makes the
    output the canonical form. Components are sorted lexicographically.
    """
    if mol.num_atoms == 0:
        return ""
    prio = priorities if priorities is not None else canonical_ranks(mol)
    parts = [_write_component(mol, comp, prio) for comp in mol.components()]
    return ".".join(sorted(parts))


def canonical_smiles(mol: Molecule) -> str:
    return write_smiles(mol, canonical_ranks(mol))


def canonicalize(smiles: str) -> str:
    """Parse and re-emit a SMILES string in canonical form."""
    return canonical_smiles(parse_smiles(smiles))


def random_smiles(mol: Molecule, rng) -> str:
    """A random valid rendering; used to test canonicalization invariance."""
    prio = list(rng.permutation(mol.num_atoms))
    return write_smiles(mol, prio)
