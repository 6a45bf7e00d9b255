"""Per-document input-embedding gradients from a checkpoint, dumped to disk.

One example at a time: mask the document with its reproducible (doc, epoch)
seed, run forward/backward, take the gradient of the input embedding table,
flatten it (optionally project it down with a seeded Gaussian matrix), and
write the row. Row order is corpus manifest order; the whole extraction is a
pure function of (checkpoint, corpus, config), so reruns are bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .corpusio import read_corpus_docs
from .dumps import read_dump_dims, write_gradient_dump
from .model import mask_ids
from .trainer import load_checkpoint


class ExtractionError(RuntimeError):
    pass


@dataclass
class ExtractionConfig:
    """Feature layout of the dumped rows.

    feature_dim None keeps the flattened embedding-table gradient whole;
    otherwise rows are projected to feature_dim with a Gaussian matrix drawn
    from projection_seed (recorded in the dump's metadata sidecar).
    mask_epoch defaults to the checkpoint's own epoch.
    """

    feature_dim: int | None = None
    projection_seed: int = 0
    mask_epoch: int | None = None


def _projection(raw_dim: int, feature_dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((raw_dim, feature_dim)) / np.sqrt(feature_dim)


def extract_checkpoint(
    checkpoint: str | Path,
    corpus_path: str | Path,
    out_path: str | Path,
    config: ExtractionConfig | None = None,
) -> Path:
    """Write one gradient dump for one checkpoint; returns the dump path.

    Documents whose gradient cannot be computed are zero-filled, flagged in
    the metadata sidecar, and reported on stderr rather than aborting the run.
    """
    config = config or ExtractionConfig()
    out_path = Path(out_path)
    torch.set_num_threads(1)
    model, vocab, payload = load_checkpoint(checkpoint)
    model.train(False)
    docs = read_corpus_docs(corpus_path)
    epoch = config.mask_epoch if config.mask_epoch is not None else payload["epoch"]
    mask_fraction = payload.get("mask_fraction", 0.15)

    raw_dim = vocab.size * model.embed.embedding_dim
    dim = config.feature_dim or raw_dim
    projection = (
        _projection(raw_dim, config.feature_dim, config.projection_seed)
        if config.feature_dim
        else None
    )
    _check_sibling_dims(out_path, len(docs), dim)

    rows = np.zeros((len(docs), dim), dtype=np.float64)
    failures: list[int] = []
    for row, doc in enumerate(docs):
        try:
            ids, positions, targets = mask_ids(
                vocab.encode(doc.tokens), doc.doc_id, epoch, vocab.mask_id, mask_fraction
            )
            model.zero_grad(set_to_none=True)
            loss = model(ids, positions, targets)
            loss.backward()
            grad = model.embed.weight.grad
            if grad is None or not torch.isfinite(grad).all():
                raise ExtractionError("non-finite or missing embedding gradient")
            flat = grad.detach().numpy().astype(np.float64).reshape(-1)
            rows[row] = flat @ projection if projection is not None else flat
        except ExtractionError as exc:
            failures.append(doc.doc_id)
            print(f"warning: doc {doc.doc_id}: {exc}; row zero-filled")
    write_gradient_dump(rows, [d.doc_id for d in docs], epoch, out_path)
    meta = {
        "checkpoint": str(checkpoint),
        "mask_epoch": epoch,
        "raw_dim": raw_dim,
        "feature_dim": dim,
        "projection_seed": config.projection_seed if projection is not None else None,
        "zero_filled_doc_ids": failures,
    }
    Path(str(out_path) + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out_path


def _check_sibling_dims(out_path: Path, n: int, d: int) -> None:
    """Refuse to write a dump whose shape disagrees with siblings in the directory."""
    for sibling in sorted(out_path.parent.glob("*.gdmp")):
        if sibling == out_path:
            continue
        sib_n, sib_d = read_dump_dims(sibling)
        if (sib_n, sib_d) != (n, d):
            raise ExtractionError(
                f"shape {n}x{d} disagrees with existing dump {sibling.name} ({sib_n}x{sib_d})"
            )
