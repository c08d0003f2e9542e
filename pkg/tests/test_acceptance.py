"""Acceptance criteria, one test per criterion.

Run with `pytest tests/test_acceptance.py -s` to see one PASS/FAIL line
per criterion.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
import torch

from conftest import make_real_pair_dataset, make_synthetic_dataset


@contextmanager
def criterion(num: int, name: str):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        print(f"\n[ACCEPTANCE {num}] {name}: FAIL")
        raise
    print(f"\n[ACCEPTANCE {num}] {name}: PASS ({time.perf_counter() - start:.1f}s)")


# -- 1: biased attention matches an independent brute-force evaluation -------


def test_criterion_1_attention_oracle():
    with criterion(1, "biased-attention oracle equivalence (2 tokens, 1 head)"):
        from ddikit.fusion import FusionConfig, FusionLayer, biased_attention

        start = time.perf_counter()
        torch.manual_seed(123)
        cfg = FusionConfig(num_layers=1, num_heads=1, hidden=2, per_drug_len=1,
                           vocab_size=4, num_classes=2, visual_dim=4)
        layer = FusionLayer(cfg).double()
        x = torch.randn(1, 2, 2, dtype=torch.double)
        mask = torch.tensor([[True, True]])
        bias = torch.randn(1, 1, 1, 2, dtype=torch.double)
        out = biased_attention(
            x, mask, layer.wq, layer.wk, layer.wv, layer.wo, 1, bias=bias
        )[0].detach().numpy()

        X = x[0].numpy()
        Q = X @ layer.wq.weight.detach().numpy().T
        K = X @ layer.wk.weight.detach().numpy().T
        V = X @ layer.wv.weight.detach().numpy().T
        logits = Q @ K.T / math.sqrt(2) + bias[0, 0, 0].numpy()[None, :]
        expected = np.zeros((2, 2))
        for q in range(2):
            row = np.exp(logits[q] - logits[q].max())
            w = row / row.sum()
            expected[q] = w @ V
        expected = expected @ layer.wo.weight.detach().numpy().T + layer.wo.bias.detach().numpy()

        assert np.abs(out - expected).max() < 1e-10
        assert time.perf_counter() - start < 1.0


# -- 2: zero-bias reduction at published model scale -------------------------


def test_criterion_2_zero_bias_reduction():
    with criterion(2, "zero-bias model equals bias-free transformer (1e-6)"):
        from ddikit.fusion import FusionConfig, PairFusionEncoder, pairs_to_tensors
        from ddikit.tokenizer import PairSequence

        torch.manual_seed(7)
        cfg = FusionConfig(num_layers=6, num_heads=8, hidden=512, per_drug_len=16,
                           vocab_size=300, num_classes=65, visual_dim=1024)
        enc = PairFusionEncoder(cfg)
        enc.projector.zero_()
        tokens = [2 + (i % 250) for i in range(20)] + [0] * 12
        pair = PairSequence(tokens, [0] * 16 + [1] * 16, [t != 0 for t in tokens])
        t, s, m = pairs_to_tensors([pair])
        visual = torch.randn(1, 1024) * 4
        with torch.no_grad():
            with_zeroed = enc(t, s, m, visual)
            without = enc(t, s, m, None)
        assert (with_zeroed - without).abs().max() < 1e-6


# -- 3: gradient checks -------------------------------------------------------


def test_criterion_3_gradient_checks():
    with criterion(3, "analytic vs finite-difference gradients (<1e-4 rel)"):
        from ddikit.fusion import FusionConfig, PairFusionEncoder, pairs_to_tensors
        from ddikit.predictor import PredictionHead
        from ddikit.tokenizer import PairSequence

        start = time.perf_counter()
        torch.manual_seed(11)
        cfg = FusionConfig(num_layers=1, num_heads=2, hidden=4, per_drug_len=2,
                           vocab_size=8, num_classes=3, visual_dim=8)
        enc = PairFusionEncoder(cfg).double()
        head = PredictionHead(4, 3).double()
        pair = PairSequence([2, 3, 4, 0], [0, 0, 1, 1], [True, True, True, False])
        t, s, m = pairs_to_tensors([pair])
        visual = torch.randn(1, 8, dtype=torch.double)

        def probe():
            z = enc(t, s, m, visual)
            return head(z).pow(2).sum()

        def check(param):
            enc.zero_grad(set_to_none=True)
            head.zero_grad(set_to_none=True)
            probe().backward()
            analytic = param.grad.clone()
            numeric = torch.zeros_like(param)
            flat, nflat = param.data.view(-1), numeric.view(-1)
            eps = 1e-6
            for i in range(flat.numel()):
                with torch.no_grad():
                    flat[i] += eps
                    up = probe().item()
                    flat[i] -= 2 * eps
                    down = probe().item()
                    flat[i] += eps
                nflat[i] = (up - down) / (2 * eps)
            return (analytic - numeric).abs().max().item() / max(
                numeric.abs().max().item(), 1e-12
            )

        assert check(enc.projector.proj.weight) < 1e-4      # (a) bias projector
        assert check(enc.layers[0].ffn[0].weight) < 1e-4    # (b) FFN
        assert check(head.mlp[0].weight) < 1e-4             # (c) prediction head
        assert time.perf_counter() - start < 30.0


# -- 4: shape laws -------------------------------------------------------------


def test_criterion_4_shape_laws(real_drug_records):
    with criterion(4, "shape laws: 2L=32, views 10x3x224x224, pair visual 1024"):
        from ddikit.encoders import ResNet18Backbone, encode_image_2d, pair_visual
        from ddikit.imaging import generate_conformer, render_3d_views
        from ddikit.tokenizer import build_vocabulary, encode_drug, join_pair

        drugs = real_drug_records[:6]
        vocab = build_vocabulary(drugs)
        sx = encode_drug(drugs[0].smiles, vocab, 16)
        sy = encode_drug(drugs[1].smiles, vocab, 16)
        pair = join_pair(sx, sy)
        assert len(pair.token_ids) == 32
        assert len(sx.token_ids) == 16

        conf = generate_conformer("CCO")
        views = render_3d_views(conf, "CCO")
        assert views.frames.shape == (10, 3, 224, 224)

        backbone = ResNet18Backbone().eval()
        with torch.no_grad():
            ix = encode_image_2d(torch.rand(3, 224, 224), backbone)[0]
            iy = encode_image_2d(torch.rand(3, 224, 224), backbone)[0]
        assert ix.shape == (512,)
        assert pair_visual(ix, iy).shape == (1024,)


# -- 5: conformer retry policy -------------------------------------------------


def test_criterion_5_conformer_policy():
    with criterion(5, "conformer budgets 5000*2^(k-1), 2D fallback after 10"):
        from ddikit.imaging import generate_conformer

        class Counting:
            def __init__(self, converge_on=None):
                self.budgets = []
                self.converge_on = converge_on

            def optimize(self, mol, coords, max_iterations):
                self.budgets.append(max_iterations)
                return coords, self.converge_on == len(self.budgets)

        failing = Counting()
        result = generate_conformer("CCO", optimizer=failing)
        assert failing.budgets == [5000 * 2 ** k for k in range(10)]
        assert result.attempts == 10
        assert result.fallback_2d and not result.converged

        early = Counting(converge_on=4)
        result = generate_conformer("CCO", optimizer=early)
        assert result.attempts == 4
        assert early.budgets == [5000, 10000, 20000, 40000]
        assert result.converged and not result.fallback_2d


# -- 6: augmentation statistics ------------------------------------------------


def test_criterion_6_augmentation_statistics():
    with criterion(6, "flip rate in [0.48,0.52], grayscale in [0.18,0.22] (10k seeds)"):
        from ddikit.imaging.render2d import draw_augment_ops

        draws = [draw_augment_ops(seed) for seed in range(10_000)]
        flip_rate = sum(f for f, _, _ in draws) / len(draws)
        gray_rate = sum(g for _, g, _ in draws) / len(draws)
        assert 0.48 <= flip_rate <= 0.52, flip_rate
        assert 0.18 <= gray_rate <= 0.22, gray_rate


# -- 7: metric oracles -----------------------------------------------------------


def test_criterion_7_metric_oracles():
    with criterion(7, "metric oracles: confusion matrix, perfect, ln(4) loss"):
        from ddikit.predictor import compute_metrics, cross_entropy

        matrix = [[2, 1, 0], [0, 1, 1], [1, 0, 2]]
        labels, preds = [], []
        for t, row in enumerate(matrix):
            for p, count in enumerate(row):
                labels += [t] * count
                preds += [p] * count
        report = compute_metrics(preds, labels)
        assert report.accuracy == 5 / 8
        assert report.macro_precision == pytest.approx((2 / 3 + 1 / 2 + 2 / 3) / 3)
        assert report.macro_recall == pytest.approx((2 / 3 + 1 / 2 + 2 / 3) / 3)
        assert report.macro_f1 == pytest.approx((2 / 3 + 1 / 2 + 2 / 3) / 3)

        perfect = compute_metrics([0, 1, 2], [0, 1, 2])
        assert (perfect.accuracy, perfect.macro_f1,
                perfect.macro_recall, perfect.macro_precision) == (1, 1, 1, 1)

        probs = torch.full((5, 4), 0.25, dtype=torch.double)
        loss = float(cross_entropy(probs, torch.tensor([0, 1, 2, 3, 0])))
        assert abs(loss - math.log(4)) < 1e-9


# -- 8: split invariants ----------------------------------------------------------


def test_criterion_8_split_invariants(tmp_path):
    with criterion(8, "split invariants over 50 seeds + Deng-scale load"):
        from ddikit.data import load_dataset, split_inductive, split_transductive

        ds = make_synthetic_dataset(n_drugs=16, n_pairs=60, n_events=4, seed=1)
        n = len(ds.interactions)
        by_event = {}
        for i, (_, _, e) in enumerate(ds.interactions):
            by_event.setdefault(e, []).append(i)
        for seed in range(50):
            s = split_transductive(ds, seed=seed)
            assert sorted(s.train + s.valid + s.test) == list(range(n))
            assert not (set(s.train) & set(s.valid))
            assert not (set(s.train) & set(s.test))
            assert not (set(s.valid) & set(s.test))
            for e, idxs in by_event.items():
                n_test = sum(1 for i in s.test if ds.interactions[i][2] == e)
                assert abs(n_test - 0.2 * len(idxs)) <= 1

        big = make_synthetic_dataset(n_drugs=30, n_pairs=200, n_events=5, seed=2)
        for seed in range(50):
            s = split_inductive(big, new_fraction=0.2, seed=seed)
            train_drugs = {d for i in s.train for d in big.interactions[i][:2]}
            assert train_drugs & s.new_drugs == set()
            s2_drugs = {d for i in s.s2 for d in big.interactions[i][:2]}
            assert s2_drugs & train_drugs == set()

        # Deng-format scale: 567 drugs, 37,159 interactions, 65 events
        drugs_path = tmp_path / "drugs.tsv"
        inter_path = tmp_path / "interactions.tsv"
        suffixes = ["", "O", "N", "Cl", "Br", "C(=O)O", "OC", "N(C)C", "S", "F"]
        with open(drugs_path, "w") as fh:
            fh.write("drug_id\tsmiles\n")
            for i in range(567):
                smiles = "C" * (1 + i // len(suffixes)) + suffixes[i % len(suffixes)]
                fh.write(f"D{i:04d}\t{smiles}\n")
        rng = np.random.default_rng(0)
        seen = set()
        with open(inter_path, "w") as fh:
            fh.write("drug_id_x\tdrug_id_y\tevent_id\n")
            written = 0
            while written < 37_159:
                x, y = rng.integers(0, 567, 2)
                if x == y or (min(x, y), max(x, y)) in seen:
                    continue
                seen.add((min(x, y), max(x, y)))
                fh.write(f"D{x:04d}\tD{y:04d}\t{written % 65}\n")
                written += 1
        loaded = load_dataset(drugs_path, inter_path)
        assert len(loaded.interactions) == 37_159
        assert loaded.num_drugs == 567
        assert loaded.num_events == 65


# -- 9: overfit smoke test ---------------------------------------------------------


def test_criterion_9_overfit_smoke(tmp_path):
    with criterion(9, "20 synthetic pairs memorized (acc >= 0.95, <2 min)"):
        from ddikit.harness.config import RunConfig
        from ddikit.harness.train import train_one_seed

        start = time.perf_counter()
        ds = make_synthetic_dataset(n_drugs=10, n_pairs=20, n_events=3, seed=0)
        config = RunConfig(
            num_layers=2, num_heads=2, node_hidden=32, seq_len=4,
            modality="none", backbone="tiny", seeds=[1], epochs=200,
            max_epochs=200, batch_size=20, lr=3e-3, weight_decay=0.0,
            patience=200, split_ratios=(0.6, 0.2, 0.2),
            out_dir=str(tmp_path / "overfit"),
        )
        result = train_one_seed(config, 1, dataset=ds)
        best_train_acc = max(h["train_accuracy"] for h in result.history)
        elapsed = time.perf_counter() - start
        assert best_train_acc >= 0.95, best_train_acc
        assert elapsed < 120.0, elapsed


# -- 10: end-to-end micro-run -------------------------------------------------------


def test_criterion_10_micro_run_2d(tmp_path):
    with criterion(10, "50 real pairs, modality 2d, 5 epochs end-to-end"):
        from ddikit.harness.artifacts import FeatureStore
        from ddikit.harness.config import RunConfig
        from ddikit.harness.evaluate import evaluate, load_checkpoint
        from ddikit.harness.explain import explain_attention
        from ddikit.harness.train import train_one_seed

        ds = make_real_pair_dataset(n_pairs=50, n_events=3, seed=7)
        config = RunConfig(
            num_layers=2, num_heads=4, node_hidden=64, seq_len=16,
            modality="2d", backbone="resnet18", seeds=[1], epochs=5,
            max_epochs=100, batch_size=18, lr=1e-3, weight_decay=1e-6,
            patience=50, out_dir=str(tmp_path / "micro"),
        )
        result = train_one_seed(config, 1, dataset=ds)
        assert len(result.history) == 5

        # checkpoint round-trip: reloaded model reproduces the logged
        # best validation Macro-F1 within 1e-6
        report = evaluate(result.checkpoint_path, ds, result.splits["valid"])
        assert abs(report.macro_f1 - result.best_val_macro_f1) < 1e-6
        again = evaluate(result.checkpoint_path, ds, result.splits["valid"])
        assert abs(report.macro_f1 - again.macro_f1) < 1e-6
        assert abs(report.accuracy - again.accuracy) < 1e-6

        # attention heatmap export: per-query weights sum to 1
        model, vocab, ckpt_config, _ = load_checkpoint(result.checkpoint_path)
        store = FeatureStore(ds, vocab, ckpt_config)
        x, y, _ = ds.interactions[0]
        pair = store.pair_sequence(x, y)
        attn = explain_attention(
            model, vocab, pair,
            images_x=store.image_tensor_2d(x),
            images_y=store.image_tensor_2d(y),
            out_prefix=tmp_path / "micro" / f"attention_{x}_{y}",
        )
        rows = np.array(attn["per_query"])
        assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-6)
        assert (tmp_path / "micro" / f"attention_{x}_{y}.png").exists()


# -- 11: view pooling ---------------------------------------------------------------


def test_criterion_11_view_pooling():
    with criterion(11, "3D view pooling: identical frames + permutation invariance"):
        from ddikit.encoders import TinyConvBackbone, encode_image_2d, encode_views_3d

        torch.manual_seed(0)
        backbone = TinyConvBackbone(out_dim=8, channels=3).double()
        frame = torch.rand(3, 16, 16, dtype=torch.double)
        stack = frame.unsqueeze(0).repeat(10, 1, 1, 1)
        pooled = encode_views_3d(stack, backbone)
        single = encode_image_2d(frame, backbone)
        assert (pooled - single).abs().max() < 1e-6

        views = torch.rand(10, 3, 16, 16, dtype=torch.double)
        perm = torch.randperm(10)
        assert (
            encode_views_3d(views, backbone) - encode_views_3d(views[perm], backbone)
        ).abs().max() < 1e-6
