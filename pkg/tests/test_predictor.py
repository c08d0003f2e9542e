import math

import numpy as np
import pytest
import torch

from ddikit.errors import EmptyInput, ShapeMismatch
from ddikit.predictor import (
    MetricsReport,
    PredictionHead,
    compute_metrics,
    cross_entropy,
    predict,
)


class TestPredict:
    def test_zero_weights_uniform(self):
        head = PredictionHead(hidden=8, num_classes=4).double()
        with torch.no_grad():
            for p in head.parameters():
                p.zero_()
        pred = predict(torch.randn(8, dtype=torch.double), head)
        assert np.allclose(pred.probs, [0.25] * 4, atol=1e-12)

    def test_probs_sum_to_one(self):
        head = PredictionHead(hidden=8, num_classes=5).double()
        pred = predict(torch.randn(8, dtype=torch.double), head)
        assert abs(sum(pred.probs) - 1) < 1e-9
        assert pred.label == int(np.argmax(pred.probs))

    def test_tiny_hand_oracle(self):
        # d=2, |R|=2, hand-set weights; independent numpy evaluation of
        # softmax(mlp(relu)(z + Wz + b))
        head = PredictionHead(hidden=2, num_classes=2).double()
        with torch.no_grad():
            head.residual.weight.copy_(torch.tensor([[0.5, 0.0], [0.0, -0.5]]).double())
            head.residual.bias.copy_(torch.tensor([0.1, 0.2]).double())
            head.mlp[0].weight.copy_(torch.tensor([[1.0, -1.0], [2.0, 0.5]]).double())
            head.mlp[0].bias.copy_(torch.tensor([0.0, -0.3]).double())
            head.mlp[2].weight.copy_(torch.tensor([[1.0, 1.0], [-1.0, 2.0]]).double())
            head.mlp[2].bias.copy_(torch.tensor([0.05, -0.05]).double())
        z = np.array([0.4, -0.6])
        rho = z + np.array([[0.5, 0.0], [0.0, -0.5]]) @ z + np.array([0.1, 0.2])
        h1 = np.maximum(np.array([[1.0, -1.0], [2.0, 0.5]]) @ rho + np.array([0.0, -0.3]), 0)
        logits = np.array([[1.0, 1.0], [-1.0, 2.0]]) @ h1 + np.array([0.05, -0.05])
        e = np.exp(logits - logits.max())
        expected = e / e.sum()
        pred = predict(torch.tensor(z, dtype=torch.double), head)
        assert np.allclose(pred.probs, expected, atol=1e-12)

    def test_shift_invariance(self):
        head = PredictionHead(hidden=4, num_classes=3).double()
        z = torch.randn(4, dtype=torch.double)
        base = predict(z, head).probs
        with torch.no_grad():
            head.mlp[2].bias.add_(7.5)  # constant shift of every logit
        shifted = predict(z, head).probs
        assert np.allclose(base, shifted, atol=1e-6)

    def test_shape_mismatch(self):
        head = PredictionHead(hidden=4, num_classes=3)
        with pytest.raises(ShapeMismatch):
            predict(torch.randn(5), head)


class TestCrossEntropy:
    def test_perfect_predictions_zero_loss(self):
        probs = torch.eye(3, dtype=torch.double)
        labels = torch.tensor([0, 1, 2])
        assert float(cross_entropy(probs, labels)) == 0.0

    def test_uniform_four_classes_ln4(self):
        probs = torch.full((6, 4), 0.25, dtype=torch.double)
        labels = torch.tensor([0, 1, 2, 3, 0, 1])
        assert abs(float(cross_entropy(probs, labels)) - math.log(4)) < 1e-9

    def test_batch_mean_matches_per_row_oracle(self):
        probs = torch.tensor(
            [[0.7, 0.2, 0.1], [0.1, 0.6, 0.3], [0.25, 0.25, 0.5]], dtype=torch.double
        )
        labels = torch.tensor([0, 2, 2])
        expected = -(math.log(0.7) + math.log(0.3) + math.log(0.5)) / 3
        assert abs(float(cross_entropy(probs, labels)) - expected) < 1e-12

    def test_zero_probability_guarded(self):
        probs = torch.tensor([[1.0, 0.0]], dtype=torch.double)
        labels = torch.tensor([1])
        loss = float(cross_entropy(probs, labels))
        assert math.isfinite(loss)
        assert abs(loss - (-math.log(1e-12))) < 1e-6

    def test_monotone_in_true_mass(self):
        labels = torch.tensor([0])
        losses = []
        for p in (0.2, 0.4, 0.6, 0.8, 0.99):
            probs = torch.tensor([[p, 1 - p]], dtype=torch.double)
            losses.append(float(cross_entropy(probs, labels)))
        assert losses == sorted(losses, reverse=True)

    def test_shape_errors(self):
        with pytest.raises(ShapeMismatch):
            cross_entropy(torch.rand(3), torch.tensor([0]))


class TestComputeMetrics:
    def test_perfect(self):
        report = compute_metrics([0, 1, 2, 1], [0, 1, 2, 1])
        assert report.accuracy == 1.0
        assert report.macro_f1 == 1.0
        assert report.macro_recall == 1.0
        assert report.macro_precision == 1.0

    def test_confusion_matrix_oracle(self):
        # fixed 3-class confusion matrix C[true][pred]:
        #   [[2,1,0],
        #    [0,1,1],
        #    [1,0,2]]
        matrix = [[2, 1, 0], [0, 1, 1], [1, 0, 2]]
        labels, preds = [], []
        for t, row in enumerate(matrix):
            for p, count in enumerate(row):
                labels += [t] * count
                preds += [p] * count
        # independent hand computation from the matrix
        expected_p, expected_r, expected_f = [], [], []
        for c in range(3):
            tp = matrix[c][c]
            fp = sum(matrix[t][c] for t in range(3)) - tp
            fn = sum(matrix[c]) - tp
            p = tp / (tp + fp) if tp + fp else 0.0
            r = tp / (tp + fn) if tp + fn else 0.0
            f = 2 * p * r / (p + r) if p + r else 0.0
            expected_p.append(p)
            expected_r.append(r)
            expected_f.append(f)
        report = compute_metrics(preds, labels)
        assert report.accuracy == pytest.approx(5 / 8)
        assert report.macro_precision == pytest.approx(sum(expected_p) / 3)
        assert report.macro_recall == pytest.approx(sum(expected_r) / 3)
        assert report.macro_f1 == pytest.approx(sum(expected_f) / 3)
        # the specific values, fully expanded
        assert report.macro_precision == pytest.approx((2 / 3 + 1 / 2 + 2 / 3) / 3)

    def test_never_predicted_class_zero_convention(self):
        report = compute_metrics([0, 0, 0], [0, 0, 1])
        assert report.per_class[1].precision == 0.0
        assert report.per_class[1].recall == 0.0
        assert report.per_class[1].f1 == 0.0
        assert report.macro_precision == pytest.approx((2 / 3 + 0) / 2)

    def test_label_space_is_ground_truth_classes(self):
        # class 5 predicted but absent from labels: not in the table
        report = compute_metrics([5, 0], [0, 0])
        assert set(report.per_class) == {0}
        assert report.per_class[0].recall == 0.5

    def test_permutation_invariant(self):
        preds = [0, 1, 2, 0, 1, 2, 1]
        labels = [0, 1, 1, 0, 2, 2, 1]
        a = compute_metrics(preds, labels)
        order = [3, 0, 6, 2, 5, 1, 4]
        b = compute_metrics([preds[i] for i in order], [labels[i] for i in order])
        assert a.summary() == b.summary()

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            compute_metrics([], [])

    def test_macro_equals_unweighted_mean(self):
        report = compute_metrics([0, 1, 1, 2], [0, 1, 2, 2])
        f1s = [s.f1 for s in report.per_class.values()]
        assert report.macro_f1 == pytest.approx(sum(f1s) / len(f1s))

    def test_json_export(self):
        import json

        report = compute_metrics([0, 1], [0, 1])
        doc = json.loads(report.to_json())
        assert doc["accuracy"] == 1.0
        assert doc["per_class"]["0"]["support"] == 1
