import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddikit.chem import decompose
from ddikit.errors import InvalidSmiles, LengthMismatch
from ddikit.tokenizer import (
    PAD_ID,
    UNK_ID,
    DrugRecord,
    MotifVocabulary,
    build_vocabulary,
    encode_drug,
    join_pair,
)

from conftest import REAL_DRUGS


class TestVocabulary:
    def test_empty_corpus(self):
        vocab = build_vocabulary([])
        assert vocab.size == 2
        assert vocab.pad_id == PAD_ID == 0
        assert vocab.unk_id == UNK_ID == 1

    def test_first_encounter_order_from_two(self):
        vocab = build_vocabulary([DrugRecord("a", "CCO"), DrugRecord("b", "CCN")])
        ids = sorted(vocab.motif_to_id.values())
        assert ids == list(range(2, 2 + len(ids)))

    def test_shared_fragment_single_id(self):
        vocab = build_vocabulary(
            [DrugRecord("a", "CCOc1ccccc1"), DrugRecord("b", "CCCOc1ccccc1")]
        )
        ring_ids = [i for m, i in vocab.motif_to_id.items() if m == "[16*]c1ccccc1"]
        assert len(ring_ids) == 1

    def test_rebuild_is_byte_identical(self):
        drugs = [DrugRecord(n, s) for n, s in sorted(REAL_DRUGS.items())]
        assert build_vocabulary(drugs).to_json() == build_vocabulary(drugs).to_json()

    def test_propagates_invalid_smiles_with_drug_id(self):
        with pytest.raises(InvalidSmiles) as err:
            build_vocabulary([DrugRecord("bad-drug", "C1CC")])
        assert "bad-drug" in str(err.value)

    def test_json_roundtrip(self, tmp_path):
        vocab = build_vocabulary([DrugRecord("a", REAL_DRUGS["aspirin"])])
        path = tmp_path / "vocab.json"
        vocab.save(path)
        loaded = MotifVocabulary.load(path)
        assert loaded.motif_to_id == vocab.motif_to_id
        assert loaded.to_json() == vocab.to_json()

    def test_json_keys_sorted_by_id(self):
        vocab = build_vocabulary([DrugRecord("a", REAL_DRUGS["aspirin"])])
        import json

        motifs = json.loads(vocab.to_json())["motifs"]
        assert list(motifs.values()) == sorted(motifs.values())


class TestEncodeDrug:
    def test_padding(self):
        vocab = build_vocabulary([DrugRecord("a", REAL_DRUGS["aspirin"])])
        seq = encode_drug(REAL_DRUGS["aspirin"], vocab, 16)
        assert seq.raw_length == 4
        assert len(seq.token_ids) == 16
        assert seq.token_ids[4:] == [PAD_ID] * 12
        assert all(t != PAD_ID for t in seq.token_ids[:4])

    def test_truncation(self):
        vocab = build_vocabulary([DrugRecord("a", REAL_DRUGS["aspirin"])])
        seq = encode_drug(REAL_DRUGS["aspirin"], vocab, 2)
        assert seq.raw_length == 4
        assert len(seq.token_ids) == 2
        assert PAD_ID not in seq.token_ids

    def test_oov_maps_to_unk(self):
        vocab = build_vocabulary([DrugRecord("a", "CCO")])
        seq = encode_drug(REAL_DRUGS["aspirin"], vocab, 8)
        assert UNK_ID in seq.token_ids

    def test_coverage_no_unk_for_vocabulary_drugs(self):
        drugs = [DrugRecord(n, s) for n, s in sorted(REAL_DRUGS.items())]
        vocab = build_vocabulary(drugs)
        for drug in drugs:
            seq = encode_drug(drug.smiles, vocab, 16)
            assert UNK_ID not in seq.token_ids, drug.drug_id

    def test_roundtrip_through_vocabulary(self):
        drugs = [DrugRecord(n, s) for n, s in sorted(REAL_DRUGS.items())]
        vocab = build_vocabulary(drugs)
        for drug in drugs:
            seq = encode_drug(drug.smiles, vocab, 16)
            fragments = decompose(drug.smiles)
            n = min(seq.raw_length, 16)
            back = [vocab.motif_of(t) for t in seq.token_ids[:n]]
            assert back == fragments[:n], drug.drug_id

    def test_bad_max_len(self):
        vocab = MotifVocabulary()
        with pytest.raises(ValueError):
            encode_drug("C", vocab, 0)


class TestJoinPair:
    def _sequences(self, max_len=16):
        drugs = [DrugRecord("a", REAL_DRUGS["aspirin"]), DrugRecord("b", "CCO")]
        vocab = build_vocabulary(drugs)
        return (
            encode_drug(drugs[0].smiles, vocab, max_len, "a"),
            encode_drug(drugs[1].smiles, vocab, max_len, "b"),
        )

    def test_joint_length_is_32_for_l16(self):
        sx, sy = self._sequences(16)
        pair = join_pair(sx, sy)
        assert len(pair.token_ids) == 32
        assert len(pair.segment_ids) == 32
        assert len(pair.key_mask) == 32

    def test_segments_split_at_l(self):
        sx, sy = self._sequences(16)
        pair = join_pair(sx, sy)
        assert pair.segment_ids[:16] == [0] * 16
        assert pair.segment_ids[16:] == [1] * 16

    def test_order_sensitive(self):
        sx, sy = self._sequences(16)
        ab = join_pair(sx, sy)
        ba = join_pair(sy, sx)
        assert ab.token_ids != ba.token_ids
        assert ab.token_ids[:16] == ba.token_ids[16:]

    def test_mask_false_exactly_at_pads(self):
        sx, sy = self._sequences(16)
        pair = join_pair(sx, sy)
        for tok, masked in zip(pair.token_ids, pair.key_mask):
            assert masked == (tok != PAD_ID)

    def test_all_pad_pair(self):
        from ddikit.tokenizer import MotifSequence

        empty = MotifSequence("x", [PAD_ID] * 4, 0)
        pair = join_pair(empty, empty)
        assert pair.key_mask == [False] * 8

    def test_length_mismatch(self):
        sx, _ = self._sequences(16)
        _, sy = self._sequences(8)
        with pytest.raises(LengthMismatch):
            join_pair(sx, sy)

    @settings(max_examples=30, deadline=None)
    @given(length=st.integers(min_value=1, max_value=40))
    def test_length_law(self, length):
        sx, sy = self._sequences(length)
        assert len(join_pair(sx, sy).token_ids) == 2 * length
