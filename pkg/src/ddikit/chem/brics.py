"""BRICS bond cleavage and motif extraction.

Implements the sixteen chemical environments (L1..L16) and the pair
table of the BRICS fragmentation scheme (Degen et al., ChemMedChem 2008)
as direct graph predicates instead of SMARTS patterns. A bond is cut
when it is acyclic, has the order the rule asks for, and its endpoints
match one of the environment pairs. Cut bonds are replaced by wildcard
atoms carrying the environment number as an isotope label, bonded with
the original bond order, which reproduces the familiar fragment strings
such as [1*]C(C)=O.

Environment semantics follow SMARTS conventions: uppercase element
constraints are aliphatic-only, `D` counts heavy-atom connections,
`!@` requires an acyclic bond, and branch patterns bind distinct
neighbor atoms.
"""

from __future__ import annotations

from dataclasses import replace

from ddikit.chem.canon import canonical_smiles
from ddikit.chem.mol import Atom, Bond, Molecule, parse_smiles

# (env_a, env_b, bond_order) in match priority order
CLEAVAGE_RULES: list[tuple[int, int, int]] = [
    (1, 3, 1), (1, 5, 1), (1, 10, 1),
    (3, 4, 1), (3, 13, 1), (3, 14, 1), (3, 15, 1), (3, 16, 1),
    (4, 5, 1), (4, 11, 1),
    (5, 12, 1), (5, 14, 1), (5, 16, 1), (5, 13, 1), (5, 15, 1),
    (6, 13, 1), (6, 14, 1), (6, 15, 1), (6, 16, 1),
    (7, 7, 2),
    (8, 9, 1), (8, 10, 1), (8, 13, 1), (8, 14, 1), (8, 15, 1), (8, 16, 1),
    (9, 13, 1), (9, 14, 1), (9, 15, 1), (9, 16, 1),
    (10, 13, 1), (10, 14, 1), (10, 15, 1), (10, 16, 1),
    (11, 13, 1), (11, 14, 1), (11, 15, 1), (11, 16, 1),
    (13, 14, 1), (13, 15, 1), (13, 16, 1),
    (14, 14, 1), (14, 15, 1), (14, 16, 1),
    (15, 16, 1),
    (16, 16, 1),
]


def _sym(mol: Molecule, i: int) -> str:
    return mol.atoms[i].symbol


def _aliphatic(mol: Molecule, i: int, symbol: str) -> bool:
    a = mol.atoms[i]
    return a.symbol == symbol and not a.aromatic


def _aromatic(mol: Molecule, i: int, symbols: tuple[str, ...]) -> bool:
    a = mol.atoms[i]
    return a.aromatic and a.symbol in symbols


def _in_ring(mol: Molecule, i: int) -> bool:
    return any(b.in_ring for _, b in mol.neighbors(i))


def _single(b: Bond) -> bool:
    return b.order == 1 and not b.aromatic


def _double(b: Bond) -> bool:
    return b.order == 2 and not b.aromatic


def _has_double(mol: Molecule, i: int) -> bool:
    return any(_double(b) for _, b in mol.neighbors(i))


def _carbonyl(mol: Molecule, i: int) -> bool:
    """Atom i is a carbon with a non-aromatic double bond to oxygen."""
    return _aliphatic(mol, i, "C") and any(
        _double(b) and _sym(mol, j) == "O" for j, b in mol.neighbors(i)
    )


def _env1(mol: Molecule, i: int) -> bool:
    # [C;D3]([#0,#6,#7,#8])(=O) : acyl carbon
    if not _aliphatic(mol, i, "C") or mol.degree(i) != 3:
        return False
    nb = mol.neighbors(i)
    doubles = [j for j, b in nb if _double(b) and _sym(mol, j) == "O"]
    if not doubles:
        return False
    return any(
        j not in doubles and _sym(mol, j) in ("*", "C", "N", "O") and _single(b)
        for j, b in nb
    )


def _env3(mol: Molecule, i: int) -> bool:
    # [O;D2]-;!@[#0,#6] : ether/ester oxygen with an acyclic single bond
    if not _aliphatic(mol, i, "O") or mol.degree(i) != 2:
        return False
    return any(
        _single(b) and not b.in_ring and _sym(mol, j) in ("*", "C")
        for j, b in mol.neighbors(i)
    )


def _env4(mol: Molecule, i: int) -> bool:
    # [C;!D1;!$(C=*)]-;!@[#6]
    if not _aliphatic(mol, i, "C") or mol.degree(i) < 2 or _has_double(mol, i):
        return False
    return any(
        _single(b) and not b.in_ring and _sym(mol, j) == "C" for j, b in mol.neighbors(i)
    )


def _env5(mol: Molecule, i: int) -> bool:
    # amine N: no double bonds, single-bonded only to C/S/dummy, not a lactam N
    if not _aliphatic(mol, i, "N") or mol.degree(i) < 2 or _has_double(mol, i):
        return False
    for j, b in mol.neighbors(i):
        if _single(b) and _sym(mol, j) not in ("C", "S", "*"):
            return False
    for j, b in mol.neighbors(i):
        if b.in_ring and _aliphatic(mol, j, "C") and _in_ring(mol, j) and _carbonyl(mol, j):
            return False
    return True


def _env6(mol: Molecule, i: int) -> bool:
    # [C;D3;!R](=O)-;!@[#0,#6,#7,#8] : acyclic acyl carbon
    if not _aliphatic(mol, i, "C") or mol.degree(i) != 3 or _in_ring(mol, i):
        return False
    if not _carbonyl(mol, i):
        return False
    return any(
        _single(b) and not b.in_ring and _sym(mol, j) in ("*", "C", "N", "O")
        for j, b in mol.neighbors(i)
    )


def _env7(mol: Molecule, i: int) -> bool:
    # [C;D2,D3]-[#6] : olefin carbon
    if not _aliphatic(mol, i, "C") or mol.degree(i) not in (2, 3):
        return False
    return any(_single(b) and _sym(mol, j) == "C" for j, b in mol.neighbors(i))


def _env8(mol: Molecule, i: int) -> bool:
    # [C;!R;!D1;!$(C!-*)] : acyclic sp3 carbon, all bonds single
    if not _aliphatic(mol, i, "C") or mol.degree(i) < 2 or _in_ring(mol, i):
        return False
    return all(_single(b) for _, b in mol.neighbors(i))


def _env9(mol: Molecule, i: int) -> bool:
    # [n;+0;$(n(:[c,n,o,s]):[c,n,o,s])] : pyridine-like aromatic nitrogen
    a = mol.atoms[i]
    if not (a.aromatic and a.symbol == "N" and a.charge == 0):
        return False
    arom = [
        j
        for j, b in mol.neighbors(i)
        if b.aromatic and _aromatic(mol, j, ("C", "N", "O", "S"))
    ]
    return len(arom) >= 2


def _env10(mol: Molecule, i: int) -> bool:
    # [N;R;$(N(@C(=O))@[C,N,O,S])] : lactam nitrogen
    if not _aliphatic(mol, i, "N") or not _in_ring(mol, i):
        return False
    ring_nb = [j for j, b in mol.neighbors(i) if b.in_ring]
    for j1 in ring_nb:
        if not _carbonyl(mol, j1) or not _in_ring(mol, j1):
            continue
        for j2 in ring_nb:
            if j2 != j1 and not mol.atoms[j2].aromatic and _sym(mol, j2) in ("C", "N", "O", "S"):
                return True
    return False


def _env11(mol: Molecule, i: int) -> bool:
    # [S;D2](-;!@[#0,#6]) : thioether sulfur
    if not _aliphatic(mol, i, "S") or mol.degree(i) != 2:
        return False
    return any(
        _single(b) and not b.in_ring and _sym(mol, j) in ("*", "C")
        for j, b in mol.neighbors(i)
    )


def _env12(mol: Molecule, i: int) -> bool:
    # [S;D4]([#6,#0])(=O)(=O) : sulfonyl sulfur
    if not _aliphatic(mol, i, "S") or mol.degree(i) != 4:
        return False
    nb = mol.neighbors(i)
    n_double_o = sum(1 for j, b in nb if _double(b) and _sym(mol, j) == "O")
    has_c = any(_single(b) and _sym(mol, j) in ("C", "*") for j, b in nb)
    return n_double_o >= 2 and has_c


def _env13(mol: Molecule, i: int) -> bool:
    # ring carbon bonded in-ring to C/N/O/S and, separately, to N/O/S
    if not _aliphatic(mol, i, "C"):
        return False
    ring_nb = [
        (j, b)
        for j, b in mol.neighbors(i)
        if b.in_ring and _single(b) and not mol.atoms[j].aromatic
    ]
    for j1, _ in ring_nb:
        if _sym(mol, j1) not in ("C", "N", "O", "S"):
            continue
        for j2, _ in ring_nb:
            if j2 != j1 and _sym(mol, j2) in ("N", "O", "S"):
                return True
    return False


def _env14(mol: Molecule, i: int) -> bool:
    # aromatic carbon next to an aromatic heteroatom
    if not _aromatic(mol, i, ("C",)):
        return False
    arom_nb = [
        j for j, b in mol.neighbors(i) if b.aromatic and _aromatic(mol, j, ("C", "N", "O", "S"))
    ]
    if len(arom_nb) < 2:
        return False
    return any(_sym(mol, j) in ("N", "O", "S") for j in arom_nb)


def _env15(mol: Molecule, i: int) -> bool:
    # aliphatic ring carbon with two in-ring single bonds to aliphatic carbons
    if not _aliphatic(mol, i, "C"):
        return False
    ring_c = [
        j
        for j, b in mol.neighbors(i)
        if b.in_ring and _single(b) and _aliphatic(mol, j, "C")
    ]
    return len(ring_c) >= 2


def _env16(mol: Molecule, i: int) -> bool:
    # aromatic carbon flanked by two aromatic carbons
    if not _aromatic(mol, i, ("C",)):
        return False
    arom_c = [
        j for j, b in mol.neighbors(i) if b.aromatic and _aromatic(mol, j, ("C",))
    ]
    return len(arom_c) >= 2


_ENV_PREDICATES = {
    1: _env1, 3: _env3, 4: _env4, 5: _env5, 6: _env6, 7: _env7, 8: _env8,
    9: _env9, 10: _env10, 11: _env11, 12: _env12, 13: _env13, 14: _env14,
    15: _env15, 16: _env16,
}


def match_environments(mol: Molecule) -> dict[int, set[int]]:
    """Map environment number -> set of matching atom indices."""
    return {
        env: {i for i in range(mol.num_atoms) if pred(mol, i)}
        for env, pred in _ENV_PREDICATES.items()
    }


def find_cleavable_bonds(mol: Molecule) -> list[tuple[int, tuple[int, int]]]:
    """All BRICS-cleavable bonds as (bond_index, (label_a1, label_a2)).

    label_a1/label_a2 are the environment numbers assigned to bond.a1 and
    bond.a2 respectively; the first matching rule in the table wins.
    """
    env = match_environments(mol)
    found: list[tuple[int, tuple[int, int]]] = []
    for bidx, bond in enumerate(mol.bonds):
        if bond.in_ring or bond.aromatic:
            continue
        for ea, eb, order in CLEAVAGE_RULES:
            if bond.order != order:
                continue
            if bond.a1 in env[ea] and bond.a2 in env[eb]:
                found.append((bidx, (ea, eb)))
                break
            if bond.a2 in env[ea] and bond.a1 in env[eb]:
                found.append((bidx, (eb, ea)))
                break
    return found


def break_bonds(mol: Molecule, cuts: list[tuple[int, tuple[int, int]]]) -> Molecule:
    """Copy of `mol` with the given bonds replaced by labeled wildcards."""
    cut_set = {bidx for bidx, _ in cuts}
    out = Molecule()
    for atom in mol.atoms:
        out.add_atom(replace(atom))
    for bidx, bond in enumerate(mol.bonds):
        if bidx not in cut_set:
            out.add_bond(Bond(bond.a1, bond.a2, bond.order, bond.aromatic, bond.in_ring))
    for bidx, (la, lb) in cuts:
        bond = mol.bonds[bidx]
        d1 = out.add_atom(Atom("*", isotope=la))
        d2 = out.add_atom(Atom("*", isotope=lb))
        out.add_bond(Bond(bond.a1, d1, bond.order))
        out.add_bond(Bond(bond.a2, d2, bond.order))
    return out


def decompose(smiles: str) -> list[str]:
    """BRICS motifs of a molecule as canonical fragment SMILES.

    Every cleavable bond is broken at once and the connected components
    are collected in order of their smallest source-atom index, without
    duplicates. A molecule with no cleavable bonds contributes itself.
    """
    mol = parse_smiles(smiles)
    cuts = find_cleavable_bonds(mol)
    if not cuts:
        return [canonical_smiles(mol)]
    broken = break_bonds(mol, cuts)
    seen: dict[str, None] = {}
    for comp in sorted(broken.components(), key=min):
        frag = canonical_smiles(broken.subgraph(comp))
        if frag not in seen:
            seen[frag] = None
    return list(seen)
