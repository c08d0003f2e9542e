"""Event classification head, loss, and evaluation metrics.

The head applies a residual affine layer (z + Wz + b), a two-layer MLP
with a rectifier, and softmax over the event classes. Loss is mean
categorical cross-entropy with a 1e-12 probability floor so a zero at
the true label cannot produce infinities; the floor is the documented
guard for that domain error.

Metric conventions: the per-class table covers exactly the classes
present in the ground truth of the split, 0/0 ratios resolve to 0, and
macro scores are unweighted means over that label space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import torch
from torch import nn

from ddikit.errors import EmptyInput, ShapeMismatch

PROB_FLOOR = 1e-12


class PredictionHead(nn.Module):
    def __init__(self, hidden: int, num_classes: int):
        super().__init__()
        self.residual = nn.Linear(hidden, hidden)
        self.mlp = nn.Sequential(
            nn.Linear(hidden, hidden), nn.ReLU(), nn.Linear(hidden, num_classes)
        )
        self.num_classes = num_classes

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        """(B, d) -> (B, num_classes) logits."""
        if z.shape[-1] != self.residual.in_features:
            raise ShapeMismatch(
                f"representation dim {z.shape[-1]}, head expects {self.residual.in_features}"
            )
        h = z + self.residual(z)
        return self.mlp(h)


@dataclass
class Prediction:
    probs: list[float]
    label: int


def predict(z: torch.Tensor, head: PredictionHead) -> Prediction:
    """Single pair representation -> class probabilities and argmax label."""
    with torch.no_grad():
        probs = torch.softmax(head(z.view(1, -1)), dim=-1)[0]
    return Prediction(probs=[float(p) for p in probs], label=int(probs.argmax()))


def cross_entropy(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean over the batch of -log p(true class), probabilities floored."""
    if probs.dim() != 2 or labels.dim() != 1 or probs.shape[0] != labels.shape[0]:
        raise ShapeMismatch(
            f"probs {tuple(probs.shape)} incompatible with labels {tuple(labels.shape)}"
        )
    picked = probs.gather(1, labels.view(-1, 1)).squeeze(1)
    return -(picked.clamp_min(PROB_FLOOR).log()).mean()


@dataclass
class ClassScores:
    support: int
    precision: float
    recall: float
    f1: float


@dataclass
class MetricsReport:
    accuracy: float
    macro_f1: float
    macro_recall: float
    macro_precision: float
    per_class: dict[int, ClassScores] = field(default_factory=dict)

    def summary(self) -> dict[str, float]:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "macro_recall": self.macro_recall,
            "macro_precision": self.macro_precision,
        }

    def to_json(self) -> str:
        doc = self.summary()
        doc["per_class"] = {
            str(c): {
                "support": s.support,
                "precision": s.precision,
                "recall": s.recall,
                "f1": s.f1,
            }
            for c, s in sorted(self.per_class.items())
        }
        return json.dumps(doc, indent=2)


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def compute_metrics(predicted: list[int], labels: list[int]) -> MetricsReport:
    """Accuracy and macro precision/recall/F1 over the ground-truth classes."""
    if not labels:
        raise EmptyInput("no samples to score")
    if len(predicted) != len(labels):
        raise ShapeMismatch(f"{len(predicted)} predictions for {len(labels)} labels")

    classes = sorted(set(labels))
    per_class: dict[int, ClassScores] = {}
    for c in classes:
        tp = sum(1 for p, y in zip(predicted, labels) if p == c and y == c)
        fp = sum(1 for p, y in zip(predicted, labels) if p == c and y != c)
        fn = sum(1 for p, y in zip(predicted, labels) if p != c and y == c)
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class[c] = ClassScores(
            support=tp + fn, precision=precision, recall=recall, f1=f1
        )

    n = len(classes)
    return MetricsReport(
        accuracy=sum(1 for p, y in zip(predicted, labels) if p == y) / len(labels),
        macro_f1=sum(s.f1 for s in per_class.values()) / n,
        macro_recall=sum(s.recall for s in per_class.values()) / n,
        macro_precision=sum(s.precision for s in per_class.values()) / n,
        per_class=per_class,
    )
