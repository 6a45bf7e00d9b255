"""Toy masked word model: predict each masked token from its context mean.

Small on purpose. The input embedding table is the parameter slice whose
per-document loss gradients get dumped, and the prediction head keeps the
gradient informative: a masked position is predicted from the mean embedding
of every other position in the (masked) document, so context embeddings all
receive gradient.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch
from torch import nn

from .hashing import deterministic_mask_seed

DEFAULT_EMBED_DIM = 16
DEFAULT_MASK_FRACTION = 0.15


class Vocab:
    """Word-level vocabulary with [MASK] and [UNK] slots at the end."""

    def __init__(self, tokens: Sequence[str]):
        self.words = tuple(sorted(set(tokens)))
        self.index = {w: i for i, w in enumerate(self.words)}
        self.mask_id = len(self.words)
        self.unk_id = len(self.words) + 1

    @property
    def size(self) -> int:
        return len(self.words) + 2

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.index.get(t, self.unk_id) for t in tokens]


class MeanContextMLM(nn.Module):
    def __init__(self, vocab_size: int, embed_dim: int = DEFAULT_EMBED_DIM):
        super().__init__()
        self.embed = nn.Embedding(vocab_size, embed_dim)
        self.out = nn.Linear(embed_dim, vocab_size)

    def forward(
        self, ids: torch.Tensor, positions: torch.Tensor, targets: torch.Tensor
    ) -> torch.Tensor:
        emb = self.embed(ids)  # (L, d)
        total = emb.sum(dim=0)
        if ids.shape[0] > 1:
            context = (total.unsqueeze(0) - emb[positions]) / (ids.shape[0] - 1)
        else:
            # single-token document: no context at all
            context = torch.zeros((positions.shape[0], emb.shape[1]), dtype=emb.dtype)
        logits = self.out(context)
        return nn.functional.cross_entropy(logits, targets)


def mask_ids(
    ids: Sequence[int],
    doc_id: int,
    epoch: int,
    mask_id: int,
    mask_fraction: float = DEFAULT_MASK_FRACTION,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Deterministically mask a document for (doc_id, epoch).

    Returns (masked ids, masked positions, original ids at those positions).
    At least one position is always masked; masked inputs always become the
    [MASK] token.
    """
    rng = np.random.default_rng(deterministic_mask_seed(doc_id, epoch))
    n = len(ids)
    k = max(1, int(round(mask_fraction * n)))
    positions = np.sort(rng.choice(n, size=k, replace=False))
    masked = list(ids)
    targets = [ids[p] for p in positions]
    for p in positions:
        masked[p] = mask_id
    return (
        torch.tensor(masked, dtype=torch.long),
        torch.tensor(positions, dtype=torch.long),
        torch.tensor(targets, dtype=torch.long),
    )
