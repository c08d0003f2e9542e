"""Dataset ingestion and split generation.

File formats (TSV with header rows):
    drugs.tsv          drug_id <TAB> smiles
    interactions.tsv   drug_id_x <TAB> drug_id_y <TAB> event_id

Interactions are undirected for bookkeeping: (x, y) and (y, x) with the
same event are duplicates (first occurrence kept, duplicates counted),
but the loaded orientation is preserved for sequence construction.

Transductive splits are stratified per event class with a seeded
shuffle; inductive splits partition drugs into old/new and route pairs
by membership: both old -> train, exactly one new -> S1, both new -> S2.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ddikit.chem import parse_smiles
from ddikit.errors import (
    ClassTooSmall,
    EmptyPartition,
    InvalidSmiles,
    ParseError,
    UnknownDrugReference,
)
from ddikit.tokenizer import DrugRecord

logger = logging.getLogger(__name__)

Interaction = tuple[str, str, int]


@dataclass
class DdiDataset:
    drugs: list[DrugRecord]
    interactions: list[Interaction]
    num_events: int
    duplicates_dropped: int = 0
    drug_by_id: dict[str, DrugRecord] = field(default_factory=dict)

    def __post_init__(self):
        if not self.drug_by_id:
            self.drug_by_id = {d.drug_id: d for d in self.drugs}

    @property
    def num_drugs(self) -> int:
        return len(self.drugs)


def _read_tsv(path: str | Path, n_cols: int) -> list[tuple[int, list[str]]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if lineno == 1 or not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != n_cols:
                raise ParseError(str(path), lineno, f"expected {n_cols} columns, got {len(parts)}")
            rows.append((lineno, parts))
    return rows


def load_dataset(
    drugs_path: str | Path,
    interactions_path: str | Path,
    num_events: int | None = None,
    validate_smiles: bool = True,
) -> DdiDataset:
    """Load and validate a dataset; infers num_events unless given."""
    drugs: list[DrugRecord] = []
    seen_ids: set[str] = set()
    for lineno, (drug_id, smiles) in _read_tsv(drugs_path, 2):
        if drug_id in seen_ids:
            raise ParseError(str(drugs_path), lineno, f"duplicate drug id {drug_id!r}")
        seen_ids.add(drug_id)
        if validate_smiles:
            try:
                parse_smiles(smiles)
            except InvalidSmiles as err:
                raise ParseError(str(drugs_path), lineno, f"bad SMILES: {err.reason}") from err
        drugs.append(DrugRecord(drug_id=drug_id, smiles=smiles))

    interactions: list[Interaction] = []
    seen_pairs: set[tuple[str, str, int]] = set()
    duplicates = 0
    max_event = -1
    for lineno, (x, y, event_str) in _read_tsv(interactions_path, 3):
        if x not in seen_ids:
            raise UnknownDrugReference(f"{interactions_path}:{lineno}: unknown drug {x!r}")
        if y not in seen_ids:
            raise UnknownDrugReference(f"{interactions_path}:{lineno}: unknown drug {y!r}")
        try:
            event = int(event_str)
        except ValueError:
            raise ParseError(str(interactions_path), lineno, f"bad event id {event_str!r}")
        if event < 0:
            raise ParseError(str(interactions_path), lineno, f"negative event id {event}")
        key = (min(x, y), max(x, y), event)
        if key in seen_pairs:
            duplicates += 1
            continue
        seen_pairs.add(key)
        max_event = max(max_event, event)
        interactions.append((x, y, event))

    if duplicates:
        logger.warning("dropped %d duplicate interactions", duplicates)
    inferred = max_event + 1
    if num_events is not None and inferred > num_events:
        raise ParseError(
            str(interactions_path), 0, f"event id {max_event} exceeds configured classes {num_events}"
        )
    return DdiDataset(
        drugs=drugs,
        interactions=interactions,
        num_events=num_events if num_events is not None else inferred,
        duplicates_dropped=duplicates,
    )


@dataclass
class TransductiveSplit:
    train: list[int]
    valid: list[int]
    test: list[int]
    seed: int
    ratios: tuple[float, float, float]


def split_transductive(
    dataset: DdiDataset,
    seed: int,
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
) -> TransductiveSplit:
    """Per-class stratified shuffle into train/valid/test index lists."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {ratios}")
    by_event: dict[int, list[int]] = {}
    for idx, (_, _, event) in enumerate(dataset.interactions):
        by_event.setdefault(event, []).append(idx)

    too_small = sorted(e for e, idxs in by_event.items() if len(idxs) < 3)
    if too_small:
        raise ClassTooSmall(too_small)

    rng = np.random.default_rng(seed)
    train: list[int] = []
    valid: list[int] = []
    test: list[int] = []
    for event in sorted(by_event):
        idxs = list(by_event[event])
        rng.shuffle(idxs)
        n = len(idxs)
        n_test = max(1, int(np.floor(n * ratios[2] + 0.5)))
        n_valid = max(1, int(np.floor(n * ratios[1] + 0.5)))
        test.extend(idxs[:n_test])
        valid.extend(idxs[n_test : n_test + n_valid])
        train.extend(idxs[n_test + n_valid :])
    return TransductiveSplit(train=train, valid=valid, test=test, seed=seed, ratios=ratios)


@dataclass
class InductiveSplit:
    train: list[int]
    s1: list[int]
    s2: list[int]
    new_drugs: set[str]
    old_drugs: set[str]
    seed: int
    new_fraction: float


def split_inductive(
    dataset: DdiDataset, new_fraction: float, seed: int
) -> InductiveSplit:
    """Drug-level cold-start split.

    new_fraction = 0 is the degenerate boundary (everything lands in
    train); for a positive fraction, every bucket must be populated.
    """
    if not 0 <= new_fraction < 1:
        raise ValueError(f"new_fraction must be in [0, 1), got {new_fraction}")
    ids = sorted(d.drug_id for d in dataset.drugs)
    rng = np.random.default_rng(seed)
    rng.shuffle(ids)
    n_new = int(round(new_fraction * len(ids)))
    new_drugs = set(ids[:n_new])
    old_drugs = set(ids[n_new:])

    train: list[int] = []
    s1: list[int] = []
    s2: list[int] = []
    for idx, (x, y, _) in enumerate(dataset.interactions):
        x_new = x in new_drugs
        y_new = y in new_drugs
        if x_new and y_new:
            s2.append(idx)
        elif x_new or y_new:
            s1.append(idx)
        else:
            train.append(idx)

    if new_fraction > 0:
        for name, bucket in (("train", train), ("S1", s1), ("S2", s2)):
            if not bucket:
                raise EmptyPartition(f"inductive bucket {name} received zero pairs")
    return InductiveSplit(
        train=train, s1=s1, s2=s2, new_drugs=new_drugs, old_drugs=old_drugs,
        seed=seed, new_fraction=new_fraction,
    )


def write_split_manifest(
    path: str | Path, buckets: dict[str, list[int]], seed: int, spec: dict
) -> None:
    doc = {"seed": seed, "spec": spec, "buckets": {k: sorted(v) for k, v in buckets.items()}}
    Path(path).write_text(json.dumps(doc, indent=2), encoding="utf-8")


def load_split_manifest(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
