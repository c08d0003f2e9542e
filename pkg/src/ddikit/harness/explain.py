"""Model explanation exports: attention heatmaps, Grad-CAM, t-SNE.

Attention: per-motif weight is the final layer's attention averaged over
heads and query rows; per-query rows (averaged over heads) each sum to 1
over unmasked keys. Grad-CAM: class-gradient-weighted activations of the
backbone's final convolutional stage, min-max normalized per frame with
values below 0.5 zeroed; a constant map normalizes to all zeros.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ddikit.errors import ModalityMismatch, TooFewSamples
from ddikit.model import DdiModel
from ddikit.tokenizer import MotifVocabulary, PairSequence

GRADCAM_THRESHOLD = 0.5


def position_labels(pair: PairSequence, vocab: MotifVocabulary) -> list[str]:
    labels = []
    for tok in pair.token_ids:
        if tok == vocab.pad_id:
            labels.append("<pad>")
        elif tok == vocab.unk_id:
            labels.append("<unk>")
        else:
            labels.append(vocab.motif_of(tok) or "<unk>")
    return labels


@torch.no_grad()
def explain_attention(
    model: DdiModel,
    vocab: MotifVocabulary,
    pair: PairSequence,
    images_x: torch.Tensor | None = None,
    images_y: torch.Tensor | None = None,
    out_prefix: str | Path | None = None,
) -> dict:
    """Final-layer attention summary for one drug pair.

    Returns per-query rows (head-averaged, each summing to 1 over real
    keys), the per-motif mass (additionally averaged over queries), and
    motif labels; optionally writes <prefix>.json and <prefix>.png.
    """
    model.eval()
    tokens = torch.tensor([pair.token_ids], dtype=torch.long)
    segments = torch.tensor([pair.segment_ids], dtype=torch.long)
    mask = torch.tensor([pair.key_mask], dtype=torch.bool)
    if model.modality != "none" and images_x is not None:
        images_x = images_x.unsqueeze(0) if images_x.dim() in (3, 4) else images_x
        images_y = images_y.unsqueeze(0) if images_y.dim() in (3, 4) else images_y
    _, attn = model(
        tokens, segments, mask, images_x, images_y, return_attention=True
    )
    final = attn[-1][0]  # (heads, T, T)
    head_mean = final.mean(dim=0)  # (T, T), rows sum to 1 over unmasked keys

    keep = [i for i, m in enumerate(pair.key_mask) if m]
    labels = position_labels(pair, vocab)
    rows = head_mean[keep][:, keep].cpu().numpy()
    motif_mass = rows.mean(axis=0)

    result = {
        "positions": keep,
        "labels": [labels[i] for i in keep],
        "segments": [pair.segment_ids[i] for i in keep],
        "per_query": rows.tolist(),
        "motif_mass": motif_mass.tolist(),
    }
    if out_prefix is not None:
        out_prefix = Path(out_prefix)
        out_prefix.parent.mkdir(parents=True, exist_ok=True)
        out_prefix.with_suffix(".json").write_text(
            json.dumps(result, indent=2), encoding="utf-8"
        )
        _attention_figure(rows, result["labels"], out_prefix.with_suffix(".png"))
    return result


def _attention_figure(rows: np.ndarray, labels: list[str], path: Path) -> None:
    short = [lb if len(lb) <= 14 else lb[:12] + ".." for lb in labels]
    fig, ax = plt.subplots(figsize=(max(4.0, 0.42 * len(short)), max(3.4, 0.4 * len(short))))
    im = ax.imshow(rows, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(short)), short, rotation=90, fontsize=6)
    ax.set_yticks(range(len(short)), short, fontsize=6)
    ax.set_xlabel("key motif")
    ax.set_ylabel("query motif")
    fig.colorbar(im, ax=ax, label="attention weight")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def gradcam_maps(
    model: DdiModel,
    pair: PairSequence,
    views_x: torch.Tensor,
    views_y: torch.Tensor,
    target_class: int | None = None,
) -> dict[str, np.ndarray]:
    """Grad-CAM saliency per frame for both drugs of a 3d-modality pair.

    Returns {"x": (10, 224, 224), "y": (10, 224, 224)} arrays in [0, 1]
    with sub-threshold values zeroed, plus the class actually explained.
    """
    if model.modality != "3d":
        raise ModalityMismatch(
            f"Grad-CAM needs a 3d checkpoint, this one is {model.modality!r}"
        )
    model.eval()
    layer = model.backbone.cam_layer()
    acts: list[torch.Tensor] = []
    grads: list[torch.Tensor] = []

    def capture(module, inputs, output):
        acts.append(output)
        output.register_hook(grads.append)

    h1 = layer.register_forward_hook(capture)
    try:
        tokens = torch.tensor([pair.token_ids], dtype=torch.long)
        segments = torch.tensor([pair.segment_ids], dtype=torch.long)
        mask = torch.tensor([pair.key_mask], dtype=torch.bool)
        logits = model(
            tokens, segments, mask, views_x.unsqueeze(0), views_y.unsqueeze(0)
        )
        cls = int(logits.argmax(dim=-1)) if target_class is None else target_class
        model.zero_grad(set_to_none=True)
        logits[0, cls].backward()
    finally:
        h1.remove()

    # forward order: x frames then y frames; gradients arrive reversed
    act_x, act_y = acts[0], acts[1]
    grad_y, grad_x = grads[0], grads[1]
    return {
        "x": _cam_from(act_x, grad_x),
        "y": _cam_from(act_y, grad_y),
        "class": cls,
    }


def _cam_from(act: torch.Tensor, grad: torch.Tensor) -> np.ndarray:
    weights = grad.mean(dim=(2, 3), keepdim=True)
    cam = torch.relu((weights * act).sum(dim=1, keepdim=True))
    cam = torch.nn.functional.interpolate(
        cam, size=(224, 224), mode="bilinear", align_corners=False
    )[:, 0]
    out = np.empty(cam.shape, dtype=np.float32)
    for i in range(cam.shape[0]):
        frame = cam[i].detach().numpy()
        lo, hi = float(frame.min()), float(frame.max())
        if hi - lo < 1e-12:
            out[i] = 0.0  # constant maps carry no localization signal
            continue
        norm = (frame - lo) / (hi - lo)
        norm[norm < GRADCAM_THRESHOLD] = 0.0
        out[i] = norm
    return out


def save_gradcam_overlays(
    maps: np.ndarray,
    frames: torch.Tensor,
    frame_indices: list[int],
    out_dir: str | Path,
    tag: str,
) -> list[Path]:
    """Overlay saliency on selected frames and save PNGs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for idx in frame_indices:
        img = frames[idx].numpy().transpose(1, 2, 0)
        fig, ax = plt.subplots(figsize=(3, 3))
        ax.imshow(img)
        ax.imshow(maps[idx], cmap="jet", alpha=0.45, vmin=0.0, vmax=1.0)
        ax.set_axis_off()
        ax.set_title(f"{tag} frame {idx}", fontsize=8)
        path = out_dir / f"gradcam_{tag}_frame{idx:02d}.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def select_events(labels: list[int], n_low: int = 20, n_high: int = 5) -> list[int]:
    """The configured low-frequency and high-frequency event ids."""
    counts: dict[int, int] = {}
    for y in labels:
        counts[y] = counts.get(y, 0) + 1
    by_freq = sorted(counts, key=lambda e: (counts[e], e))
    low = by_freq[:n_low]
    high = sorted(by_freq, key=lambda e: (-counts[e], e))[:n_high]
    return sorted(set(low) | set(high))


def export_tsne(
    representations: np.ndarray,
    labels: list[int],
    seed: int,
    out_prefix: str | Path | None = None,
) -> np.ndarray:
    """Seeded 2D t-SNE of pair representations; returns (N, 2) coords."""
    n = len(representations)
    if n < 2:
        raise TooFewSamples(f"t-SNE needs at least 2 samples, got {n}")
    from sklearn.manifold import TSNE

    perplexity = min(30.0, max(1.0, (n - 1) / 3.0))
    tsne = TSNE(
        n_components=2,
        random_state=seed,
        init="pca",
        perplexity=perplexity,
        method="exact" if n < 1000 else "barnes_hut",
    )
    coords = tsne.fit_transform(np.asarray(representations, dtype=np.float64))

    if out_prefix is not None:
        out_prefix = Path(out_prefix)
        out_prefix.parent.mkdir(parents=True, exist_ok=True)
        with open(out_prefix.with_suffix(".tsv"), "w", encoding="utf-8") as fh:
            fh.write("x\ty\tevent\n")
            for (x, y), ev in zip(coords, labels):
                fh.write(f"{x:.6f}\t{y:.6f}\t{ev}\n")
        fig, ax = plt.subplots(figsize=(5, 4))
        scatter = ax.scatter(
            coords[:, 0], coords[:, 1], c=labels, cmap="tab20", s=14, alpha=0.85
        )
        fig.colorbar(scatter, ax=ax, label="event id")
        ax.set_xlabel("t-SNE 1")
        ax.set_ylabel("t-SNE 2")
        fig.tight_layout()
        fig.savefig(out_prefix.with_suffix(".png"), dpi=150)
        plt.close(fig)
    return coords
