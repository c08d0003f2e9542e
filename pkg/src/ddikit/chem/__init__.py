"""Self-contained cheminformatics core: SMILES in/out, rings, fragmentation."""

from ddikit.chem.mol import Atom, Bond, Molecule, parse_smiles
from ddikit.chem.canon import canonical_smiles, canonicalize, write_smiles
from ddikit.chem.brics import decompose, find_cleavable_bonds

__all__ = [
    "Atom",
    "Bond",
    "Molecule",
    "parse_smiles",
    "canonical_smiles",
    "canonicalize",
    "write_smiles",
    "decompose",
    "find_cleavable_bonds",
]
