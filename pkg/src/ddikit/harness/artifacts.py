"""Per-drug feature assembly for training and evaluation.

Motif sequences are encoded once per drug. 2D base images are rendered
once and re-augmented per epoch with seeds derived from (run seed,
epoch, drug), so a rerun reproduces the same augmentation stream; at
evaluation time the center-cropped base image is used unaugmented. 3D
frame stacks are deterministic and rendered once, optionally persisted
in a cache directory.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import torch

from ddikit.data import DdiDataset
from ddikit.harness.config import RunConfig
from ddikit.imaging import (
    Image2D,
    RenderParams,
    augment_2d,
    generate_conformer,
    render_2d,
    render_3d_views,
)
from ddikit.imaging.render2d import center_crop
from ddikit.tokenizer import (
    DrugRecord,
    MotifVocabulary,
    PairSequence,
    build_vocabulary,
    encode_drug,
    join_pair,
)


def stable_seed(*parts) -> int:
    blob = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def build_scoped_vocabulary(
    dataset: DdiDataset, config: RunConfig, train_indices: list[int] | None = None
) -> MotifVocabulary:
    """Vocabulary over all drugs, or only those reachable from train pairs."""
    if config.vocab_scope == "train" and train_indices is not None:
        ids = sorted(
            {d for i in train_indices for d in dataset.interactions[i][:2]}
        )
        drugs = [dataset.drug_by_id[i] for i in ids]
    else:
        drugs = dataset.drugs
    return build_vocabulary(drugs)


class FeatureStore:
    def __init__(
        self,
        dataset: DdiDataset,
        vocab: MotifVocabulary,
        config: RunConfig,
        cache_dir: str | Path | None = None,
    ):
        self.dataset = dataset
        self.vocab = vocab
        self.config = config
        self.render_params = RenderParams()
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self._sequences: dict[str, object] = {}
        self._base_2d: dict[str, Image2D] = {}
        self._views_3d: dict[str, torch.Tensor] = {}

    def sequence(self, drug_id: str):
        if drug_id not in self._sequences:
            record: DrugRecord = self.dataset.drug_by_id[drug_id]
            self._sequences[drug_id] = encode_drug(
                record.smiles, self.vocab, self.config.seq_len, drug_id=drug_id
            )
        return self._sequences[drug_id]

    def pair_sequence(self, drug_x: str, drug_y: str) -> PairSequence:
        return join_pair(self.sequence(drug_x), self.sequence(drug_y))

    # -- 2D ---------------------------------------------------------------

    def base_image(self, drug_id: str) -> Image2D:
        if drug_id not in self._base_2d:
            record = self.dataset.drug_by_id[drug_id]
            self._base_2d[drug_id] = render_2d(record.smiles, self.render_params)
        return self._base_2d[drug_id]

    def image_tensor_2d(self, drug_id: str, augment_seed: int | None = None) -> torch.Tensor:
        """(3, H, W) float tensor in [0, 1]; augmented when a seed is given."""
        base = self.base_image(drug_id)
        if augment_seed is None:
            img = center_crop(base, self.render_params.output_size)
        else:
            img = augment_2d(base, augment_seed)
        arr = np.asarray(img.pixels, dtype=np.float32) / 255.0
        return torch.from_numpy(arr.transpose(2, 0, 1))

    # -- 3D ---------------------------------------------------------------

    def views_tensor(self, drug_id: str) -> torch.Tensor:
        """(10, 3, 224, 224) float tensor, cached per drug."""
        if drug_id not in self._views_3d:
            cached = self._load_cached_views(drug_id)
            if cached is None:
                record = self.dataset.drug_by_id[drug_id]
                conformer = generate_conformer(record.smiles)
                views = render_3d_views(conformer, record.smiles)
                cached = torch.from_numpy(views.frames)
                self._store_cached_views(drug_id, cached)
            self._views_3d[drug_id] = cached
        return self._views_3d[drug_id]

    def _views_path(self, drug_id: str) -> Path | None:
        if self.cache_dir is None:
            return None
        tag = hashlib.sha256(drug_id.encode()).hexdigest()[:20]
        return self.cache_dir / f"views_{tag}.npy"

    def _load_cached_views(self, drug_id: str) -> torch.Tensor | None:
        path = self._views_path(drug_id)
        if path is not None and path.exists():
            return torch.from_numpy(np.load(path))
        return None

    def _store_cached_views(self, drug_id: str, views: torch.Tensor) -> None:
        path = self._views_path(drug_id)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            np.save(path, views.numpy())

    # -- batches ----------------------------------------------------------

    def normalizer_stats(self, drug_ids: list[str]) -> tuple[torch.Tensor, torch.Tensor]:
        """Per-channel mean/std over the training drugs' base artifacts."""
        sums = torch.zeros(3, dtype=torch.float64)
        sqsums = torch.zeros(3, dtype=torch.float64)
        count = 0
        for drug_id in drug_ids:
            if self.config.modality == "2d":
                t = self.image_tensor_2d(drug_id).double()
            else:
                t = self.views_tensor(drug_id).double().reshape(-1, 3, 224, 224).mean(dim=0)
            sums += t.sum(dim=(1, 2))
            sqsums += (t * t).sum(dim=(1, 2))
            count += t.shape[1] * t.shape[2]
        mean = sums / count
        var = sqsums / count - mean * mean
        return mean.float(), var.clamp_min(1e-12).sqrt().float()

    def batch(
        self,
        indices: list[int],
        run_seed: int = 0,
        epoch: int | None = None,
        device=None,
    ) -> dict[str, torch.Tensor]:
        """Tensors for a batch of interaction indices.

        `epoch=None` means evaluation: no 2D augmentation.
        """
        pairs = []
        labels = []
        xs, ys = [], []
        for idx in indices:
            x, y, event = self.dataset.interactions[idx]
            pairs.append(self.pair_sequence(x, y))
            labels.append(event)
            if self.config.modality == "2d":
                sx = stable_seed(run_seed, epoch, x) if epoch is not None else None
                sy = stable_seed(run_seed, epoch, y) if epoch is not None else None
                xs.append(self.image_tensor_2d(x, sx))
                ys.append(self.image_tensor_2d(y, sy))
            elif self.config.modality == "3d":
                xs.append(self.views_tensor(x))
                ys.append(self.views_tensor(y))

        from ddikit.fusion import pairs_to_tensors

        tokens, segments, mask = pairs_to_tensors(pairs, device=device)
        out = {
            "token_ids": tokens,
            "segment_ids": segments,
            "key_mask": mask,
            "labels": torch.tensor(labels, dtype=torch.long, device=device),
        }
        if xs:
            out["images_x"] = torch.stack(xs).to(device) if device else torch.stack(xs)
            out["images_y"] = torch.stack(ys).to(device) if device else torch.stack(ys)
        return out
