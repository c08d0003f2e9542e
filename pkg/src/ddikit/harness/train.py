"""Training pipeline.

Per seed: draw the split, build the vocabulary, assemble per-drug
features, then run minibatch epochs of forward -> softmax ->
cross-entropy -> Adam over every trainable parameter (image encoder
included). The checkpoint with the best validation Macro-F1 is kept;
training stops at the epoch budget or after `patience` epochs without
improvement. Everything downstream of the seed is deterministic.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ddikit.data import (
    DdiDataset,
    load_dataset,
    split_inductive,
    split_transductive,
    write_split_manifest,
)
from ddikit.errors import ConfigError, DataError, NonFiniteLoss
from ddikit.fusion import FusionConfig
from ddikit.harness.artifacts import FeatureStore, build_scoped_vocabulary, stable_seed
from ddikit.harness.config import RunConfig
from ddikit.harness.evaluate import evaluate_model, save_checkpoint
from ddikit.model import DdiModel
from ddikit.predictor import cross_entropy
from ddikit.tokenizer import MotifVocabulary

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    checkpoint_path: Path
    history: list[dict]
    best_epoch: int
    best_val_macro_f1: float
    splits: dict[str, list[int]]
    vocab: MotifVocabulary


def _draw_splits(dataset: DdiDataset, config: RunConfig, seed: int) -> dict[str, list[int]]:
    if config.split == "transductive":
        s = split_transductive(dataset, seed=seed, ratios=config.split_ratios)
        return {"train": s.train, "valid": s.valid, "test": s.test}
    s = split_inductive(dataset, new_fraction=config.new_fraction, seed=seed)
    # the cold-start split has no validation bucket of its own: carve one
    # from the both-old pairs so checkpoint selection never sees new drugs
    rng = np.random.default_rng(stable_seed(seed, "inductive-valid"))
    train = list(s.train)
    rng.shuffle(train)
    n_valid = max(1, int(len(train) * config.valid_fraction_inductive))
    return {
        "train": sorted(train[n_valid:]),
        "valid": sorted(train[:n_valid]),
        "s1": s.s1,
        "s2": s.s2,
    }


def _build_model(config: RunConfig, vocab_size: int, num_classes: int) -> DdiModel:
    # visual_dim follows the configured backbone even for image-free runs,
    # so "same config, different modality" models share trunk initialization
    visual_dim = 16 if config.backbone == "tiny" else 1024
    fusion = FusionConfig(
        num_layers=config.num_layers,
        num_heads=config.num_heads,
        hidden=config.node_hidden,
        per_drug_len=config.seq_len,
        vocab_size=vocab_size,
        num_classes=num_classes,
        dropout=config.dropout,
        visual_dim=visual_dim,
    )
    return DdiModel(fusion, modality=config.modality, backbone_name=config.backbone)


def train_one_seed(
    config: RunConfig,
    seed: int,
    dataset: DdiDataset | None = None,
    out_dir: str | Path | None = None,
) -> TrainResult:
    """Run the full pipeline for one seed and return the best checkpoint."""
    torch.manual_seed(seed)
    if dataset is None:
        if not config.drugs_path or not config.interactions_path:
            raise ConfigError("dataset paths are required")
        dataset = load_dataset(
            config.drugs_path, config.interactions_path, num_events=config.num_classes
        )
    if not dataset.interactions:
        raise DataError("dataset has no interactions")

    num_classes = config.num_classes or dataset.num_events
    splits = _draw_splits(dataset, config, seed)
    vocab = build_scoped_vocabulary(dataset, config, splits["train"])
    if config.vocab_size is not None and vocab.size != config.vocab_size:
        logger.warning(
            "vocabulary size %d differs from configured %d", vocab.size, config.vocab_size
        )

    run_dir = Path(out_dir) if out_dir else Path(config.out_dir) / f"seed-{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = run_dir / "cache" if config.modality == "3d" else None
    store = FeatureStore(dataset, vocab, config, cache_dir=cache_dir)

    model = _build_model(config, vocab.size, num_classes)
    if config.modality != "none":
        train_drugs = sorted(
            {d for i in splits["train"] for d in dataset.interactions[i][:2]}
        )
        mean, std = store.normalizer_stats(train_drugs)
        model.normalizer.set_stats(mean, std)
    if config.zero_bias_projector:
        model.fusion.projector.zero_()
    if config.freeze_bias_projector:
        for p in model.fusion.projector.parameters():
            p.requires_grad_(False)
    if config.freeze_backbone and model.backbone is not None:
        for p in model.backbone.parameters():
            p.requires_grad_(False)

    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(params, lr=config.lr, weight_decay=config.weight_decay)

    vocab.save(run_dir / "vocab.json")
    write_split_manifest(
        run_dir / "split.json",
        splits,
        seed=seed,
        spec={"mode": config.split, "ratios": list(config.split_ratios)},
    )

    checkpoint_path = run_dir / "checkpoint.pt"
    history: list[dict] = []
    best_f1 = -math.inf
    best_epoch = -1
    stall = 0
    train_idx = list(splits["train"])

    for epoch in range(1, config.epochs + 1):
        model.train()
        rng = np.random.default_rng(stable_seed(seed, "shuffle", epoch))
        order = list(train_idx)
        rng.shuffle(order)

        total_loss = 0.0
        n_batches = 0
        n_correct = 0
        for start in range(0, len(order), config.batch_size):
            batch = store.batch(
                order[start : start + config.batch_size], run_seed=seed, epoch=epoch
            )
            logits = model(
                batch["token_ids"],
                batch["segment_ids"],
                batch["key_mask"],
                batch.get("images_x"),
                batch.get("images_y"),
            )
            probs = torch.softmax(logits, dim=-1)
            loss = cross_entropy(probs, batch["labels"])
            if not torch.isfinite(loss):
                raise NonFiniteLoss(
                    f"non-finite loss at epoch {epoch}, batch {n_batches} "
                    f"(lr={config.lr}, wd={config.weight_decay})"
                )
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach())
            n_correct += int((logits.detach().argmax(dim=-1) == batch["labels"]).sum())
            n_batches += 1

        val_report = evaluate_model(model, store, splits["valid"])
        entry = {
            "epoch": epoch,
            "train_loss": total_loss / max(1, n_batches),
            "train_accuracy": n_correct / len(order),
            "val": val_report.summary(),
        }
        history.append(entry)
        logger.info(
            "epoch %d loss %.4f val macro-F1 %.4f", epoch, entry["train_loss"],
            val_report.macro_f1,
        )

        if val_report.macro_f1 > best_f1:
            best_f1 = val_report.macro_f1
            best_epoch = epoch
            stall = 0
            save_checkpoint(
                checkpoint_path,
                model=model,
                optimizer=optimizer,
                epoch=epoch,
                best_val_macro_f1=best_f1,
                config=config,
                vocab=vocab,
            )
        else:
            stall += 1
            if stall >= config.patience:
                logger.info("validation stalled for %d epochs, stopping", stall)
                break

    (run_dir / "history.jsonl").write_text(
        "".join(json.dumps(e) + "\n" for e in history), encoding="utf-8"
    )
    return TrainResult(
        checkpoint_path=checkpoint_path,
        history=history,
        best_epoch=best_epoch,
        best_val_macro_f1=best_f1,
        splits=splits,
        vocab=vocab,
    )


def train(config: RunConfig, dataset: DdiDataset | None = None) -> list[TrainResult]:
    """Train once per configured seed (splits are redrawn per seed)."""
    return [train_one_seed(config, seed, dataset=dataset) for seed in config.seeds]
