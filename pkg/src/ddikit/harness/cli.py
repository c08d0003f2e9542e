"""Command-line interface.

Every subcommand takes --config (YAML with RunConfig keys) plus targeted
flags, writes its outputs under --out together with a manifest.json
recording the config hash, seed, and sha256 of each input file. Success
exits 0; failures print one JSON object to stderr and exit nonzero.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
import torch

from ddikit.data import load_dataset, load_split_manifest, write_split_manifest
from ddikit.errors import ConfigError, DdikitError
from ddikit.harness.artifacts import FeatureStore, build_scoped_vocabulary
from ddikit.harness.config import RunConfig, file_sha256
from ddikit.harness.evaluate import (
    aggregate_runs,
    evaluate_model,
    load_checkpoint,
)
from ddikit.harness.explain import (
    explain_attention,
    export_tsne,
    gradcam_maps,
    save_gradcam_overlays,
    select_events,
)
from ddikit.harness.train import train_one_seed
from ddikit.predictor import MetricsReport


def _fail(err: Exception, code: int = 1):
    doc = {"error": type(err).__name__, "message": str(err)}
    click.echo(json.dumps(doc), err=True)
    sys.exit(code)


def json_errors(fn):
    """Uniform failure contract: JSON on stderr, nonzero exit."""
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DdikitError as err:
            _fail(err, code=1)
        except (OSError, KeyError, ValueError) as err:
            _fail(err, code=2)

    return wrapper


def _manifest(out_dir: Path, config: RunConfig, inputs: list[str], extra: dict | None = None):
    doc = {
        "config_hash": config.config_hash(),
        "seeds": list(config.seeds),
        "inputs": {p: file_sha256(p) for p in inputs if p and Path(p).exists()},
    }
    doc.update(extra or {})
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2), encoding="utf-8")


def _load(config_path: str, out: str | None) -> RunConfig:
    config = RunConfig.from_yaml(config_path)
    if out:
        config.out_dir = out
    return config


def _dataset(config: RunConfig):
    if not config.drugs_path or not config.interactions_path:
        raise ConfigError("config must set drugs_path and interactions_path")
    return load_dataset(
        config.drugs_path, config.interactions_path, num_events=config.num_classes
    )


@click.group()
def main():
    """Drug-drug interaction prediction toolkit."""


@main.command("build-vocab")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
@json_errors
def build_vocab_cmd(config_path, out):
    """Build the motif vocabulary from the drug table."""
    config = _load(config_path, out)
    dataset = _dataset(config)
    vocab = build_scoped_vocabulary(dataset, config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab.save(out_dir / "vocab.json")
    _manifest(out_dir, config, [config.drugs_path], {"vocab_size": vocab.size})
    click.echo(f"vocabulary of {vocab.size} ids -> {out_dir / 'vocab.json'}")


@main.command("render-2d")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--drug-id", "drug_ids", multiple=True, help="default: all drugs")
@click.option("--out", default=None, type=click.Path())
@json_errors
def render_2d_cmd(config_path, drug_ids, out):
    """Render deterministic 2D molecule images to PNG."""
    from PIL import Image

    from ddikit.imaging import RenderParams, render_2d

    config = _load(config_path, out)
    dataset = _dataset(config)
    out_dir = Path(config.out_dir) / "images2d"
    out_dir.mkdir(parents=True, exist_ok=True)
    params = RenderParams()
    todo = list(drug_ids) or [d.drug_id for d in dataset.drugs]
    for drug_id in todo:
        record = dataset.drug_by_id[drug_id]
        img = render_2d(record.smiles, params)
        Image.fromarray(img.pixels).save(out_dir / f"{drug_id}.png")
    _manifest(
        out_dir, config, [config.drugs_path],
        {"rendered": len(todo), "scheme_id": params.scheme_id()},
    )
    click.echo(f"rendered {len(todo)} drugs -> {out_dir}")


@main.command("render-3d")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--drug-id", "drug_ids", multiple=True, help="default: all drugs")
@click.option("--out", default=None, type=click.Path())
@json_errors
def render_3d_cmd(config_path, drug_ids, out):
    """Generate conformers and 10-frame view stacks (.npy + sidecar)."""
    from ddikit.imaging import generate_conformer, render_3d_views, save_views
    from ddikit.imaging.render3d import StickBallRenderer

    config = _load(config_path, out)
    dataset = _dataset(config)
    out_dir = Path(config.out_dir) / "views3d"
    out_dir.mkdir(parents=True, exist_ok=True)
    todo = list(drug_ids) or [d.drug_id for d in dataset.drugs]
    for drug_id in todo:
        record = dataset.drug_by_id[drug_id]
        conformer = generate_conformer(record.smiles)
        views = render_3d_views(conformer, record.smiles)
        save_views(
            views,
            out_dir / f"{drug_id}.npy",
            meta={
                "smiles": record.smiles,
                "attempts": conformer.attempts,
                "fallback_2d": conformer.fallback_2d,
                "render_scheme": StickBallRenderer().scheme_id(),
            },
        )
    _manifest(out_dir, config, [config.drugs_path], {"rendered": len(todo)})
    click.echo(f"rendered {len(todo)} view stacks -> {out_dir}")


@main.command("split")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=None, type=int, help="default: first configured seed")
@click.option("--out", default=None, type=click.Path())
@json_errors
def split_cmd(config_path, seed, out):
    """Draw a transductive or inductive split and write the manifest."""
    from ddikit.harness.train import _draw_splits

    config = _load(config_path, out)
    dataset = _dataset(config)
    seed = seed if seed is not None else config.seeds[0]
    splits = _draw_splits(dataset, config, seed)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_split_manifest(
        out_dir / "split.json", splits, seed=seed,
        spec={"mode": config.split, "ratios": list(config.split_ratios)},
    )
    _manifest(out_dir, config, [config.drugs_path, config.interactions_path])
    sizes = {k: len(v) for k, v in splits.items()}
    click.echo(f"split sizes: {sizes} -> {out_dir / 'split.json'}")


@main.command("train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", default=None, type=click.Path())
@json_errors
def train_cmd(config_path, out):
    """Train one model per configured seed; keep best-validation checkpoints."""
    config = _load(config_path, out)
    dataset = _dataset(config)
    rows = []
    for seed in config.seeds:
        result = train_one_seed(config, seed, dataset=dataset)
        rows.append(
            {
                "seed": seed,
                "checkpoint": str(result.checkpoint_path),
                "best_epoch": result.best_epoch,
                "best_val_macro_f1": result.best_val_macro_f1,
            }
        )
        click.echo(
            f"seed {seed}: best val macro-F1 {result.best_val_macro_f1:.4f} "
            f"at epoch {result.best_epoch}"
        )
    out_dir = Path(config.out_dir)
    _manifest(
        out_dir, config,
        [config.drugs_path, config.interactions_path],
        {"runs": rows},
    )


@main.command("eval")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--split-manifest", "split_path", required=True, type=click.Path(exists=True))
@click.option("--bucket", default="test", help="train | valid | test | s1 | s2")
@click.option("--vocab", "vocab_path", default=None, type=click.Path(exists=True),
              help="optional vocabulary to check against the checkpoint")
@click.option("--out", default=None, type=click.Path())
@json_errors
def eval_cmd(config_path, checkpoint, split_path, bucket, vocab_path, out):
    """Score a checkpoint on one split bucket."""
    config = _load(config_path, out)
    dataset = _dataset(config)
    manifest = load_split_manifest(split_path)
    if bucket not in manifest["buckets"]:
        raise ConfigError(
            f"bucket {bucket!r} not in split manifest ({sorted(manifest['buckets'])})"
        )
    model, vocab, ckpt_config, _ = load_checkpoint(checkpoint)
    if vocab_path is not None:
        from ddikit.harness.evaluate import _check_vocab
        from ddikit.tokenizer import MotifVocabulary

        _check_vocab(vocab, MotifVocabulary.load(vocab_path))
    store = FeatureStore(dataset, vocab, ckpt_config)
    report = evaluate_model(model, store, manifest["buckets"][bucket])
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"metrics_{bucket}.json").write_text(report.to_json(), encoding="utf-8")
    _manifest(
        out_dir, config,
        [config.drugs_path, config.interactions_path, checkpoint, split_path],
        {"bucket": bucket, "metrics": report.summary()},
    )
    click.echo(report.to_json())


@main.command("aggregate")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--metrics", "metric_paths", multiple=True, required=True,
              type=click.Path(exists=True), help="metrics_*.json files from eval runs")
@click.option("--out", default=None, type=click.Path())
@json_errors
def aggregate_cmd(config_path, metric_paths, out):
    """Mean and std across run metrics; writes TSV, JSON, and a bar figure."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    reports = []
    for path in metric_paths:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        reports.append(
            MetricsReport(
                accuracy=doc["accuracy"],
                macro_f1=doc["macro_f1"],
                macro_recall=doc["macro_recall"],
                macro_precision=doc["macro_precision"],
            )
        )
    table = aggregate_runs(reports)
    if out is None:
        out = _load(config_path, None).out_dir if config_path else "aggregate"
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "aggregate.json").write_text(json.dumps(table, indent=2), encoding="utf-8")
    with open(out_dir / "aggregate.tsv", "w", encoding="utf-8") as fh:
        fh.write("metric\tmean\tstd\n")
        for metric, stats in table.items():
            fh.write(f"{metric}\t{stats['mean']:.6f}\t{stats['std']:.6f}\n")

    names = list(table)
    means = [table[m]["mean"] for m in names]
    stds = [table[m]["std"] for m in names]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(names, means, yerr=stds, capsize=4, color="#4878d0")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(out_dir / "aggregate.png", dpi=150)
    plt.close(fig)
    click.echo((out_dir / "aggregate.tsv").read_text())


@main.command("explain-attention")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--drug-x", required=True)
@click.option("--drug-y", required=True)
@click.option("--out", default=None, type=click.Path())
@json_errors
def explain_attention_cmd(config_path, checkpoint, drug_x, drug_y, out):
    """Export the motif attention table and heatmap for one pair."""
    config = _load(config_path, out)
    dataset = _dataset(config)
    model, vocab, ckpt_config, _ = load_checkpoint(checkpoint)
    store = FeatureStore(dataset, vocab, ckpt_config)
    pair = store.pair_sequence(drug_x, drug_y)
    kwargs = {}
    if model.modality == "2d":
        kwargs = {
            "images_x": store.image_tensor_2d(drug_x),
            "images_y": store.image_tensor_2d(drug_y),
        }
    elif model.modality == "3d":
        kwargs = {
            "images_x": store.views_tensor(drug_x),
            "images_y": store.views_tensor(drug_y),
        }
    out_dir = Path(config.out_dir)
    prefix = out_dir / f"attention_{drug_x}_{drug_y}"
    explain_attention(model, vocab, pair, out_prefix=prefix, **kwargs)
    _manifest(out_dir, config, [checkpoint], {"pair": [drug_x, drug_y]})
    click.echo(f"wrote {prefix}.json and {prefix}.png")


@main.command("explain-gradcam")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--drug-x", required=True)
@click.option("--drug-y", required=True)
@click.option("--frames", default="0,3,6,9", help="comma-separated frame indices")
@click.option("--target-class", default=None, type=int)
@click.option("--out", default=None, type=click.Path())
@json_errors
def explain_gradcam_cmd(config_path, checkpoint, drug_x, drug_y, frames, target_class, out):
    """Export Grad-CAM overlays on selected 3D frames of a pair."""
    config = _load(config_path, out)
    dataset = _dataset(config)
    model, vocab, ckpt_config, _ = load_checkpoint(checkpoint)
    store = FeatureStore(dataset, vocab, ckpt_config)
    pair = store.pair_sequence(drug_x, drug_y)
    views_x = store.views_tensor(drug_x)
    views_y = store.views_tensor(drug_y)
    maps = gradcam_maps(model, pair, views_x, views_y, target_class=target_class)
    idxs = [int(i) for i in frames.split(",")]
    out_dir = Path(config.out_dir)
    written = save_gradcam_overlays(maps["x"], views_x, idxs, out_dir, f"{drug_x}")
    written += save_gradcam_overlays(maps["y"], views_y, idxs, out_dir, f"{drug_y}")
    stats = {
        "class": maps["class"],
        "frames": idxs,
        "coverage_x": [float((maps["x"][i] > 0).mean()) for i in idxs],
        "coverage_y": [float((maps["y"][i] > 0).mean()) for i in idxs],
    }
    (out_dir / f"gradcam_{drug_x}_{drug_y}.json").write_text(
        json.dumps(stats, indent=2), encoding="utf-8"
    )
    _manifest(out_dir, config, [checkpoint], {"pair": [drug_x, drug_y]})
    click.echo(f"wrote {len(written)} overlays -> {out_dir}")


@main.command("tsne")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--split-manifest", "split_path", required=True, type=click.Path(exists=True))
@click.option("--bucket", default="test")
@click.option("--n-low", default=20, type=int, help="low-frequency events to keep")
@click.option("--n-high", default=5, type=int, help="high-frequency events to keep")
@click.option("--seed", default=0, type=int)
@click.option("--out", default=None, type=click.Path())
@json_errors
def tsne_cmd(config_path, checkpoint, split_path, bucket, n_low, n_high, seed, out):
    """Project pair representations of selected events to 2D."""
    config = _load(config_path, out)
    dataset = _dataset(config)
    manifest = load_split_manifest(split_path)
    indices = manifest["buckets"][bucket]
    model, vocab, ckpt_config, _ = load_checkpoint(checkpoint)
    store = FeatureStore(dataset, vocab, ckpt_config)

    labels_all = [dataset.interactions[i][2] for i in indices]
    wanted = set(select_events(labels_all, n_low=n_low, n_high=n_high))
    picked = [i for i in indices if dataset.interactions[i][2] in wanted]

    reps = []
    labels = []
    with torch.no_grad():
        for start in range(0, len(picked), 64):
            chunk = picked[start : start + 64]
            batch = store.batch(chunk)
            z = model.pair_representation(
                batch["token_ids"], batch["segment_ids"], batch["key_mask"],
                batch.get("images_x"), batch.get("images_y"),
            )
            reps.append(z.numpy())
            labels.extend(int(v) for v in batch["labels"])
    out_dir = Path(config.out_dir)
    prefix = out_dir / f"tsne_{bucket}"
    export_tsne(np.concatenate(reps), labels, seed=seed, out_prefix=prefix)
    _manifest(out_dir, config, [checkpoint], {"bucket": bucket, "events": sorted(wanted)})
    click.echo(f"wrote {prefix}.tsv and {prefix}.png")


if __name__ == "__main__":
    main()
