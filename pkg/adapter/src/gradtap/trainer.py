"""Toy trainer: random-order passes with per-epoch checkpoints and a loss log.

Exists so the curriculum pipeline has end-to-end fixtures: it produces real
checkpoints of a real (tiny) model trained on a corpus manifest, plus a
"step loss" log the analysis side can consume. Deterministic for a fixed seed:
model init from torch's seeded RNG, per-epoch visit order from a hashed
stream, masking from the (doc, epoch) hash, single-threaded math.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .corpusio import read_corpus_docs
from .model import DEFAULT_EMBED_DIM, DEFAULT_MASK_FRACTION, MeanContextMLM, Vocab, mask_ids

CHECKPOINT_PREFIX = "ckpt_"


class TrainingError(RuntimeError):
    pass


@dataclass
class ToyTrainConfig:
    epochs: int
    seed: int
    embed_dim: int = DEFAULT_EMBED_DIM
    lr: float = 0.05
    mask_fraction: float = DEFAULT_MASK_FRACTION


def _order_seed(seed: int, epoch: int) -> int:
    digest = hashlib.sha256(f"order:{seed}:{epoch}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")


def checkpoint_path(out_dir: Path, epoch: int) -> Path:
    return out_dir / f"{CHECKPOINT_PREFIX}{epoch:02d}.pt"


def toy_train(corpus_path: str | Path, out_dir: str | Path, config: ToyTrainConfig) -> list[Path]:
    """Train for config.epochs random-order passes; one checkpoint per epoch.

    Returns the checkpoint paths. Also writes `loss.log` ("step loss" lines)
    next to them. Aborts with a diagnostic if the loss ever goes non-finite.
    """
    if config.epochs < 1:
        raise TrainingError(f"epochs must be >= 1, got {config.epochs}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    docs = read_corpus_docs(corpus_path)
    vocab = Vocab([t for d in docs for t in d.tokens])

    torch.set_num_threads(1)
    torch.manual_seed(config.seed)
    model = MeanContextMLM(vocab.size, config.embed_dim)
    optimizer = torch.optim.SGD(model.parameters(), lr=config.lr)

    paths: list[Path] = []
    step = 0
    with (out_dir / "loss.log").open("w", encoding="utf-8") as log:
        log.write("# step loss\n")
        for epoch in range(1, config.epochs + 1):
            order = np.random.default_rng(_order_seed(config.seed, epoch)).permutation(len(docs))
            for idx in order:
                doc = docs[int(idx)]
                ids, positions, targets = mask_ids(
                    vocab.encode(doc.tokens), doc.doc_id, epoch, vocab.mask_id, config.mask_fraction
                )
                loss = model(ids, positions, targets)
                if not torch.isfinite(loss):
                    raise TrainingError(
                        f"loss diverged (non-finite) at epoch {epoch}, doc {doc.doc_id}"
                    )
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                step += 1
                log.write(f"{step} {loss.item()!r}\n")
            path = checkpoint_path(out_dir, epoch)
            torch.save(
                {
                    "state_dict": model.state_dict(),
                    "words": list(vocab.words),
                    "embed_dim": config.embed_dim,
                    "mask_fraction": config.mask_fraction,
                    "epoch": epoch,
                    "seed": config.seed,
                },
                path,
            )
            paths.append(path)
    return paths


def load_checkpoint(path: str | Path) -> tuple[MeanContextMLM, Vocab, dict]:
    path = Path(path)
    if not path.exists():
        raise TrainingError(f"checkpoint not found: {path}")
    payload = torch.load(path, weights_only=False)
    vocab = Vocab(payload["words"])
    model = MeanContextMLM(vocab.size, payload["embed_dim"])
    model.load_state_dict(payload["state_dict"])
    return model, vocab, payload
