"""Motif vocabulary and joint pair sequences.

Drugs are fragmented into BRICS motifs; each distinct canonical fragment
gets an integer id. A drug becomes a fixed-length id sequence (pad or
truncate to L), and a drug pair becomes the concatenation of the two
sequences with segment ids and a key mask.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ddikit.chem import decompose
from ddikit.errors import InvalidSmiles, LengthMismatch

PAD_ID = 0
UNK_ID = 1


@dataclass(frozen=True)
class DrugRecord:
    drug_id: str
    smiles: str


@dataclass
class MotifVocabulary:
    """Bijection between canonical fragment SMILES and ids >= 2."""

    motif_to_id: dict[str, int] = field(default_factory=dict)
    pad_id: int = PAD_ID
    unk_id: int = UNK_ID

    @property
    def size(self) -> int:
        return len(self.motif_to_id) + 2

    def add(self, motif: str) -> int:
        if motif not in self.motif_to_id:
            self.motif_to_id[motif] = len(self.motif_to_id) + 2
        return self.motif_to_id[motif]

    def lookup(self, motif: str) -> int:
        return self.motif_to_id.get(motif, self.unk_id)

    def motif_of(self, token_id: int) -> str | None:
        """Inverse lookup; None for specials."""
        if token_id in (self.pad_id, self.unk_id):
            return None
        return self._id_to_motif().get(token_id)

    def _id_to_motif(self) -> dict[int, str]:
        return {i: m for m, i in self.motif_to_id.items()}

    def to_json(self) -> str:
        motifs = dict(sorted(self.motif_to_id.items(), key=lambda kv: kv[1]))
        return json.dumps(
            {"pad_id": self.pad_id, "unk_id": self.unk_id, "motifs": motifs},
            ensure_ascii=False,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "MotifVocabulary":
        doc = json.loads(text)
        vocab = cls(pad_id=doc["pad_id"], unk_id=doc["unk_id"])
        vocab.motif_to_id = {m: int(i) for m, i in doc["motifs"].items()}
        return vocab

    @classmethod
    def load(cls, path: str | Path) -> "MotifVocabulary":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass
class MotifSequence:
    drug_id: str
    token_ids: list[int]
    raw_length: int

    @property
    def length(self) -> int:
        return len(self.token_ids)


@dataclass
class PairSequence:
    token_ids: list[int]
    segment_ids: list[int]
    key_mask: list[bool]


def build_vocabulary(drugs: list[DrugRecord]) -> MotifVocabulary:
    """Vocabulary over all fragments of all drugs, first-encounter order."""
    vocab = MotifVocabulary()
    for drug in drugs:
        try:
            fragments = decompose(drug.smiles)
        except InvalidSmiles as err:
            raise InvalidSmiles(drug.smiles, err.reason, drug_id=drug.drug_id) from err
        for frag in fragments:
            vocab.add(frag)
    return vocab


def encode_drug(
    smiles: str, vocab: MotifVocabulary, max_len: int, drug_id: str = ""
) -> MotifSequence:
    """Fixed-length motif id sequence: truncate past max_len, pad below it."""
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    fragments = decompose(smiles)
    ids = [vocab.lookup(f) for f in fragments]
    raw = len(ids)
    ids = ids[:max_len] + [vocab.pad_id] * max(0, max_len - raw)
    return MotifSequence(drug_id=drug_id, token_ids=ids, raw_length=raw)


def join_pair(seq_x: MotifSequence, seq_y: MotifSequence) -> PairSequence:
    """Concatenate two per-drug sequences into the joint pair sequence."""
    if seq_x.length != seq_y.length:
        raise LengthMismatch(
            f"per-drug lengths differ: {seq_x.length} vs {seq_y.length}"
        )
    tokens = list(seq_x.token_ids) + list(seq_y.token_ids)
    segments = [0] * seq_x.length + [1] * seq_y.length
    mask = [t != PAD_ID for t in tokens]
    return PairSequence(token_ids=tokens, segment_ids=segments, key_mask=mask)
