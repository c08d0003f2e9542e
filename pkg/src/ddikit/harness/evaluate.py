"""Checkpointing, evaluation, and multi-run aggregation."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from ddikit.data import DdiDataset
from ddikit.errors import EmptyInput, VocabularyMismatch
from ddikit.fusion import FusionConfig
from ddikit.harness.config import RunConfig
from ddikit.model import DdiModel
from ddikit.predictor import MetricsReport, compute_metrics
from ddikit.tokenizer import MotifVocabulary


def save_checkpoint(
    path: str | Path,
    model: DdiModel,
    optimizer: torch.optim.Optimizer | None,
    epoch: int,
    best_val_macro_f1: float,
    config: RunConfig,
    vocab: MotifVocabulary,
) -> None:
    torch.save(
        {
            "model_state": model.state_dict(),
            "optimizer_state": optimizer.state_dict() if optimizer else None,
            "epoch": epoch,
            "best_val_macro_f1": best_val_macro_f1,
            "config": config.to_dict(),
            "config_hash": config.config_hash(),
            "fusion_config": asdict(model.config),
            "modality": model.modality,
            "vocab_json": vocab.to_json(),
        },
        path,
    )


def load_checkpoint(path: str | Path) -> tuple[DdiModel, MotifVocabulary, RunConfig, dict]:
    """-> (model in eval mode, vocabulary, run config, raw payload)."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = RunConfig.from_dict(payload["config"])
    fusion = FusionConfig(**payload["fusion_config"])
    model = DdiModel(fusion, modality=payload["modality"], backbone_name=config.backbone)
    model.load_state_dict(payload["model_state"])
    model.eval()
    vocab = MotifVocabulary.from_json(payload["vocab_json"])
    return model, vocab, config, payload


def _check_vocab(checkpoint_vocab: MotifVocabulary, provided: MotifVocabulary | None):
    if provided is not None and provided.to_json() != checkpoint_vocab.to_json():
        raise VocabularyMismatch(
            "provided vocabulary differs from the one the checkpoint was trained with"
        )


@torch.no_grad()
def evaluate_model(model: DdiModel, store, indices: list[int], batch_size: int = 64) -> MetricsReport:
    """Deterministic metrics for one split, given an assembled feature store."""
    if not indices:
        raise EmptyInput("empty split")
    model.eval()
    predicted: list[int] = []
    labels: list[int] = []
    for start in range(0, len(indices), batch_size):
        batch = store.batch(indices[start : start + batch_size])
        logits = model(
            batch["token_ids"],
            batch["segment_ids"],
            batch["key_mask"],
            batch.get("images_x"),
            batch.get("images_y"),
        )
        predicted.extend(int(i) for i in logits.argmax(dim=-1))
        labels.extend(int(i) for i in batch["labels"])
    return compute_metrics(predicted, labels)


def evaluate(
    checkpoint_path: str | Path,
    dataset: DdiDataset,
    indices: list[int],
    vocab: MotifVocabulary | None = None,
    batch_size: int = 64,
) -> MetricsReport:
    """Score a checkpoint on one bucket (train/valid/test/S1/S2)."""
    from ddikit.harness.artifacts import FeatureStore

    model, ckpt_vocab, config, _ = load_checkpoint(checkpoint_path)
    _check_vocab(ckpt_vocab, vocab)
    store = FeatureStore(dataset, ckpt_vocab, config)
    return evaluate_model(model, store, indices, batch_size=batch_size)


def aggregate_runs(reports: list[MetricsReport]) -> dict[str, dict[str, float]]:
    """Per-metric mean and sample standard deviation across runs."""
    if not reports:
        raise EmptyInput("no reports to aggregate")
    out: dict[str, dict[str, float]] = {}
    for key in ("accuracy", "macro_f1", "macro_recall", "macro_precision"):
        values = np.array([getattr(r, key) for r in reports], dtype=np.float64)
        std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        out[key] = {"mean": float(values.mean()), "std": std}
    return out
