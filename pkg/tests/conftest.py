import numpy as np
import pytest

from ddikit.data import DdiDataset
from ddikit.tokenizer import DrugRecord

# Real drug structures used across the suite.
REAL_DRUGS = {
    "aspirin": "CC(=O)Oc1ccccc1C(=O)O",
    "paracetamol": "CC(=O)Nc1ccc(O)cc1",
    "ibuprofen": "CC(C)Cc1ccc(C(C)C(=O)O)cc1",
    "caffeine": "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
    "naproxen": "COc1ccc2cc(C(C)C(=O)O)ccc2c1",
    "nicotine": "CN1CCCC1c1cccnc1",
    "benzocaine": "CCOC(=O)c1ccc(N)cc1",
    "procaine": "CCN(CC)CCOC(=O)c1ccc(N)cc1",
    "lidocaine": "CCN(CC)CC(=O)Nc1c(C)cccc1C",
    "atenolol": "CC(C)NCC(O)COc1ccc(CC(N)=O)cc1",
    "propranolol": "CC(C)NCC(O)COc1cccc2ccccc12",
    "metoprolol": "COCCc1ccc(OCC(O)CNC(C)C)cc1",
    "salbutamol": "CC(C)(C)NCC(O)c1ccc(O)c(CO)c1",
    "theophylline": "Cn1c(=O)c2[nH]cnc2n(C)c1=O",
    "warfarin": "CC(=O)CC(c1ccccc1)c1c(O)c2ccccc2oc1=O",
    "diazepam": "CN1C(=O)CN=C(c2ccccc2)c2cc(Cl)ccc21",
    "metformin": "CN(C)C(=N)NC(=N)N",
    "fluoxetine": "CNCCC(Oc1ccc(C(F)(F)F)cc1)c1ccccc1",
    "sulfamethoxazole": "Cc1onc(NS(=O)(=O)c2ccc(N)cc2)c1",
    "trimethoprim": "COc1cc(Cc2cnc(N)nc2N)cc(OC)c1OC",
    "chloramphenicol": "OCC(NC(=O)C(Cl)Cl)C(O)c1ccc([N+](=O)[O-])cc1",
    "ranitidine": "CNC(=C[N+](=O)[O-])NCCSCc1ccc(CN(C)C)o1",
    "cimetidine": "Cc1nc[nH]c1CSCCNC(=NC)NC#N",
    "omeprazole": "COc1ccc2[nH]c(S(=O)Cc3ncc(C)c(OC)c3C)nc2c1",
    "celecoxib": "Cc1ccc(-c2cc(C(F)(F)F)nn2-c2ccc(S(N)(=O)=O)cc2)cc1",
    "acyclovir": "Nc1nc2c(ncn2COCCO)c(=O)[nH]1",
    "ketoprofen": "CC(C(=O)O)c1cccc(C(=O)c2ccccc2)c1",
    "benzene": "c1ccccc1",
}


@pytest.fixture(scope="session")
def real_drug_records() -> list[DrugRecord]:
    return [DrugRecord(name, smi) for name, smi in REAL_DRUGS.items()]


def make_synthetic_dataset(
    n_drugs: int = 10, n_pairs: int = 20, n_events: int = 3, seed: int = 0
) -> DdiDataset:
    """Small memorizable dataset over simple valid molecules."""
    stems = ["CCO", "CCCO", "CCN", "CCCN", "CCOC", "CCC(=O)O", "CC(C)O",
             "CCSC", "CCCl", "CCBr", "CCCOC", "CCCCN", "CCF", "CC(C)N"]
    # prepend the chain extension: every stem starts with carbon, so the
    # grown SMILES stays valid for any length
    drugs = [
        DrugRecord(f"d{i}", "C" * (i // len(stems)) + stems[i % len(stems)])
        for i in range(n_drugs)
    ]
    rng = np.random.default_rng(seed)
    seen = set()
    interactions = []
    while len(interactions) < n_pairs:
        x, y = rng.integers(0, n_drugs, 2)
        if x == y or (min(x, y), max(x, y)) in seen:
            continue
        seen.add((min(x, y), max(x, y)))
        interactions.append((f"d{x}", f"d{y}", len(interactions) % n_events))
    return DdiDataset(drugs=drugs, interactions=interactions, num_events=n_events)


@pytest.fixture
def synthetic_dataset() -> DdiDataset:
    return make_synthetic_dataset()


def make_real_pair_dataset(n_pairs: int, n_events: int = 3, seed: int = 7) -> DdiDataset:
    """Pairs drawn from the real drug corpus."""
    names = sorted(REAL_DRUGS)
    drugs = [DrugRecord(n, REAL_DRUGS[n]) for n in names]
    rng = np.random.default_rng(seed)
    seen = set()
    interactions = []
    while len(interactions) < n_pairs:
        x, y = rng.integers(0, len(names), 2)
        if x == y or (min(x, y), max(x, y)) in seen:
            continue
        seen.add((min(x, y), max(x, y)))
        interactions.append((names[x], names[y], len(interactions) % n_events))
    return DdiDataset(drugs=drugs, interactions=interactions, num_events=n_events)
