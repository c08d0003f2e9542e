"""Molecular graph and SMILES reader.

Covers the subset of SMILES that drug datasets use in practice: the
organic subset, bracket atoms (isotope, charge, explicit hydrogens,
atom class), branches, ring closures (including %nn), dot-separated
components, wildcard atoms, and bond symbols. Tetrahedral (@, @@) and
cis/trans (/, \\) markers are accepted and discarded: fragment identity
in this package is constitutional, not stereochemical.

Hydrogen counts are resolved at parse time and frozen. Explicit [H]
atoms are folded into their heavy neighbor so downstream code only ever
sees heavy-atom graphs. Kekule aromatic rings are perceived and
converted to the aromatic flag form (see `rings.perceive_aromaticity`)
so that 'C1=CC=CC=C1' and 'c1ccccc1' become the same graph.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from ddikit.errors import InvalidSmiles

ORGANIC_SUBSET = {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s"}

# Valence lists for implicit-hydrogen resolution: the smallest listed
# valence >= the bond-order sum wins; above the largest, zero hydrogens.
DEFAULT_VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3, 5),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

_BRACKET_RE = re.compile(
    r"\[(?P<isotope>\d+)?(?P<symbol>[A-Z][a-z]?|[bcnops]|se|as|\*)"
    r"(?P<chiral>@{1,2}(?:TH[12]|AL[12]|SP[1-3]|TB\d{1,2}|OH\d{1,2})?)?"
    r"(?P<hcount>H\d*)?"
    r"(?P<charge>\+{1,3}|-{1,3}|\+\d+|-\d+)?"
    r"(?::(?P<cls>\d+))?\]"
)

_TWO_LETTER_ORGANIC = ("Cl", "Br")


@dataclass
class Atom:
    """One heavy atom (or wildcard) in the graph."""

    symbol: str
    aromatic: bool = False
    charge: int = 0
    isotope: int | None = None
    n_h: int = 0
    atom_class: int | None = None
    # True when the H count came from bracket notation and must not be inferred
    explicit_h: bool = False

    def key(self) -> tuple:
        return (self.symbol, self.aromatic, self.charge, self.isotope or 0, self.n_h)


@dataclass
class Bond:
    """Edge between two atom indices; order 1/2/3 plus an aromatic flag."""

    a1: int
    a2: int
    order: int = 1
    aromatic: bool = False
    in_ring: bool = False

    def other(self, idx: int) -> int:
        return self.a2 if idx == self.a1 else self.a1


@dataclass
class Molecule:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)
    _adj: list[list[int]] = field(default_factory=list, repr=False)

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    def add_atom(self, atom: Atom) -> int:
        self.atoms.append(atom)
        self._adj.append([])
        return len(self.atoms) - 1

    def add_bond(self, bond: Bond) -> int:
        idx = len(self.bonds)
        self.bonds.append(bond)
        self._adj[bond.a1].append(idx)
        self._adj[bond.a2].append(idx)
        return idx

    def neighbors(self, idx: int) -> list[tuple[int, Bond]]:
        return [(self.bonds[b].other(idx), self.bonds[b]) for b in self._adj[idx]]

    def degree(self, idx: int) -> int:
        return len(self._adj[idx])

    def bond_between(self, i: int, j: int) -> Bond | None:
        for b in self._adj[i]:
            if self.bonds[b].other(i) == j:
                return self.bonds[b]
        return None

    def components(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists."""
        seen = [False] * self.num_atoms
        out: list[list[int]] = []
        for start in range(self.num_atoms):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                i = stack.pop()
                comp.append(i)
                for j, _ in self.neighbors(i):
                    if not seen[j]:
                        seen[j] = True
                        stack.append(j)
            out.append(sorted(comp))
        return out

    def subgraph(self, atom_indices: list[int]) -> "Molecule":
        """Copy of the induced subgraph; atom order follows `atom_indices`."""
        remap = {old: new for new, old in enumerate(atom_indices)}
        sub = Molecule()
        for old in atom_indices:
            sub.add_atom(replace(self.atoms[old]))
        for bond in self.bonds:
            if bond.a1 in remap and bond.a2 in remap:
                sub.add_bond(
                    Bond(remap[bond.a1], remap[bond.a2], bond.order, bond.aromatic, bond.in_ring)
                )
        return sub


def _parse_bracket(token: str, smiles: str) -> tuple[Atom, int]:
    m = _BRACKET_RE.match(token)
    if m is None:
        raise InvalidSmiles(smiles, f"malformed bracket atom at {token[:12]!r}")
    symbol = m.group("symbol")
    aromatic = symbol[0].islower() and symbol != "*"
    if aromatic:
        symbol = symbol.capitalize()
    hcount = m.group("hcount")
    n_h = 0
    if hcount is not None:
        n_h = int(hcount[1:]) if len(hcount) > 1 else 1
    charge_tok = m.group("charge")
    charge = 0
    if charge_tok:
        if charge_tok[1:].isdigit():
            charge = int(charge_tok[1:]) * (1 if charge_tok[0] == "+" else -1)
        else:
            charge = len(charge_tok) * (1 if charge_tok[0] == "+" else -1)
    isotope = int(m.group("isotope")) if m.group("isotope") else None
    cls = int(m.group("cls")) if m.group("cls") else None
    atom = Atom(
        symbol,
        aromatic=aromatic,
        charge=charge,
        isotope=isotope,
        n_h=n_h,
        atom_class=cls,
        explicit_h=True,
    )
    return atom, m.end()


def _bond_order_sum(mol: Molecule, idx: int) -> int:
    """Bond-order sum for hydrogen inference; aromatic bonds count 1."""
    total = 0
    for _, bond in mol.neighbors(idx):
        total += 1 if bond.aromatic else bond.order
    return total


def _aromatic_adjust(mol: Molecule, idx: int) -> int:
    """Extra valence unit an aromatic atom spends on its ring pi bond.

    Applies to aromatic B/C/N/P that carry no explicit multiple bond: in
    every Kekule structure such an atom holds one ring double bond. O and
    S donate a lone pair instead and spend nothing, which gives thiophene
    and furan their zero hydrogens; likewise a lowercase carbon with an
    exocyclic double bond (aromatic-form pyranones) spends nothing extra.
    """
    atom = mol.atoms[idx]
    if not atom.aromatic or atom.symbol not in ("B", "C", "N", "P"):
        return 0
    if any(b.order >= 2 and not b.aromatic for _, b in mol.neighbors(idx)):
        return 0
    # no promotion past the lowest valence: an aromatic n with three sigma
    # connections is pyrrole-type and holds no ring double bond
    if _bond_order_sum(mol, idx) + 1 > DEFAULT_VALENCES[atom.symbol][0]:
        return 0
    return 1


def used_valence(mol: Molecule, idx: int) -> int:
    return _bond_order_sum(mol, idx) + _aromatic_adjust(mol, idx)


def infer_hydrogens(mol: Molecule, idx: int) -> int:
    """Implicit hydrogen count a bare organic-subset token would get.

    Reproduces the usual aromatic counts (c in benzene: 1H, n in
    pyridine: 0H, s in thiophene: 0H) without kekulizing; the writer uses
    this to decide when an atom needs bracket notation.
    """
    atom = mol.atoms[idx]
    if atom.symbol not in DEFAULT_VALENCES:
        return 0
    return _fill_valence(atom.symbol, used_valence(mol, idx))


def parse_smiles(smiles: str) -> Molecule:
    """Parse SMILES into a heavy-atom Molecule.

    Raises InvalidSmiles on syntax errors, unclosed rings or branches,
    and on organic-subset atoms whose bond-order sum exceeds the element's
    largest valence.
    """
    if not smiles or not smiles.strip():
        raise InvalidSmiles(smiles, "empty string")
    smiles = smiles.strip()
    mol = Molecule()
    # (atom_idx, pending bond symbol) per open branch level
    prev: int | None = None
    stack: list[int | None] = []
    pending_bond: str | None = None
    # ring closure number -> (atom_idx, bond symbol at opening)
    ring_open: dict[int, tuple[int, str | None]] = {}
    # bonds whose symbol was unspecified; resolved after ring perception
    unspecified: list[int] = []
    explicit_h: list[tuple[int, int]] = []  # (heavy placeholder idx, count) for [H] folding

    i = 0
    n = len(smiles)
    while i < n:
        ch = smiles[i]
        if ch == "(":
            if prev is None:
                raise InvalidSmiles(smiles, "branch with no preceding atom")
            stack.append(prev)
            i += 1
            continue
        if ch == ")":
            if not stack:
                raise InvalidSmiles(smiles, "unmatched ')'")
            if pending_bond is not None:
                raise InvalidSmiles(smiles, "dangling bond before ')'")
            prev = stack.pop()
            i += 1
            continue
        if ch in "-=#$:":
            if pending_bond is not None:
                raise InvalidSmiles(smiles, "two consecutive bond symbols")
            pending_bond = ch
            i += 1
            continue
        if ch in "/\\":
            # directional single bond; geometry dropped
            pending_bond = "-"
            i += 1
            continue
        if ch == ".":
            if pending_bond is not None:
                raise InvalidSmiles(smiles, "bond before '.'")
            prev = None
            i += 1
            continue
        if ch.isdigit() or ch == "%":
            if prev is None:
                raise InvalidSmiles(smiles, "ring closure with no preceding atom")
            if ch == "%":
                if i + 2 >= n or not smiles[i + 1 : i + 3].isdigit():
                    raise InvalidSmiles(smiles, "malformed %nn ring closure")
                num = int(smiles[i + 1 : i + 3])
                i += 3
            else:
                num = int(ch)
                i += 1
            if num in ring_open:
                other, open_sym = ring_open.pop(num)
                if other == prev:
                    raise InvalidSmiles(smiles, f"ring bond {num} closes on itself")
                if mol.bond_between(other, prev) is not None:
                    raise InvalidSmiles(smiles, f"duplicate bond via ring closure {num}")
                sym = pending_bond or open_sym
                if pending_bond and open_sym and pending_bond != open_sym:
                    raise InvalidSmiles(smiles, f"conflicting bond symbols on ring closure {num}")
                bidx = mol.add_bond(_make_bond(other, prev, sym))
                if sym is None:
                    unspecified.append(bidx)
                pending_bond = None
            else:
                ring_open[num] = (prev, pending_bond)
                pending_bond = None
            continue
        # atom token
        if ch == "[":
            end = smiles.find("]", i)
            if end == -1:
                raise InvalidSmiles(smiles, "unclosed bracket atom")
            atom, consumed = _parse_bracket(smiles[i : end + 1], smiles)
            i += consumed
        elif smiles[i : i + 2] in _TWO_LETTER_ORGANIC:
            atom = Atom(smiles[i : i + 2])
            i += 2
        elif ch.upper() in ORGANIC_SUBSET and ch.upper() == ch:
            atom = Atom(ch)
            i += 1
        elif ch in AROMATIC_SYMBOLS:
            atom = Atom(ch.upper(), aromatic=True)
            i += 1
        elif ch == "*":
            atom = Atom("*")
            i += 1
        else:
            raise InvalidSmiles(smiles, f"unexpected character {ch!r} at position {i}")

        idx = mol.add_atom(atom)
        if prev is not None:
            bidx = mol.add_bond(_make_bond(prev, idx, pending_bond))
            if pending_bond is None:
                unspecified.append(bidx)
        elif pending_bond is not None:
            raise InvalidSmiles(smiles, "bond with no preceding atom")
        pending_bond = None
        prev = idx

    if ring_open:
        raise InvalidSmiles(smiles, f"unclosed ring bond(s): {sorted(ring_open)}")
    if stack:
        raise InvalidSmiles(smiles, "unclosed branch")
    if pending_bond is not None:
        raise InvalidSmiles(smiles, "dangling bond at end of string")

    _finalize(mol, smiles, unspecified)
    return mol


def _make_bond(a1: int, a2: int, sym: str | None) -> Bond:
    if sym is None or sym == "-":
        return Bond(a1, a2, 1)
    if sym == "=":
        return Bond(a1, a2, 2)
    if sym == "#":
        return Bond(a1, a2, 3)
    if sym == "$":
        return Bond(a1, a2, 4)
    if sym == ":":
        return Bond(a1, a2, 1, aromatic=True)
    raise AssertionError(sym)


def _finalize(mol: Molecule, smiles: str, unspecified: list[int]) -> None:
    """Resolve aromatic-default bonds, hydrogens, valence, aromaticity."""
    from ddikit.chem import rings

    ring_bonds = rings.ring_bond_indices(mol)
    for bond in mol.bonds:
        bond.in_ring = False
    for b in ring_bonds:
        mol.bonds[b].in_ring = True

    # Unspecified bond between two aromatic atoms inside a ring is aromatic.
    for b in unspecified:
        bond = mol.bonds[b]
        if bond.in_ring and mol.atoms[bond.a1].aromatic and mol.atoms[bond.a2].aromatic:
            bond.aromatic = True

    # Fold explicit [H] atoms into their heavy neighbor; each consumes one
    # valence unit of that neighbor.
    folded = [0] * mol.num_atoms
    h_idx = {
        i
        for i, a in enumerate(mol.atoms)
        if a.symbol == "H" and a.charge == 0 and a.isotope in (None, 1)
    }
    if h_idx:
        for i in sorted(h_idx):
            nb = mol.neighbors(i)
            if len(nb) != 1 or nb[0][1].order != 1 or nb[0][0] in h_idx:
                raise InvalidSmiles(smiles, "unsupported explicit hydrogen bonding")
            folded[nb[0][0]] += 1
        keep = [i for i in range(mol.num_atoms) if i not in h_idx]
        if not keep:
            raise InvalidSmiles(smiles, "molecule has no heavy atoms")
        folded = [folded[i] for i in keep]
        stripped = mol.subgraph(keep)
        mol.atoms, mol.bonds, mol._adj = stripped.atoms, stripped.bonds, stripped._adj

    for i, atom in enumerate(mol.atoms):
        if atom.symbol == "*":
            continue
        if atom.explicit_h:
            atom.n_h += folded[i]
            continue
        if atom.symbol not in DEFAULT_VALENCES:
            raise InvalidSmiles(smiles, f"element {atom.symbol} requires bracket notation")
        used = used_valence(mol, i) + folded[i]
        if used > max(DEFAULT_VALENCES[atom.symbol]):
            raise InvalidSmiles(
                smiles, f"valence {used} exceeds maximum for {atom.symbol} at atom {i}"
            )
        atom.n_h = _fill_valence(atom.symbol, used) + folded[i]

    rings.perceive_aromaticity(mol)


def _fill_valence(symbol: str, used: int) -> int:
    for v in DEFAULT_VALENCES[symbol]:
        if used <= v:
            return v - used
    return 0
