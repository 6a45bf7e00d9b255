"""Fixtures: corpus manifests written per the documented wire format."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest


def write_toy_corpus(path: Path, n_docs: int = 20, seed: int = 0, vocab: int = 40) -> Path:
    rng = random.Random(seed)
    stages = ("C1", "C2", "C3", "C4", "C5")
    records = []
    words = 0
    for i in range(n_docs):
        n = rng.randint(3, 14)
        words += n
        text = " ".join(f"w{rng.randint(0, vocab - 1)}" for _ in range(n))
        records.append(
            {"doc_id": i, "source": "s", "stage": stages[i % 5], "text": text}
        )
    header = {"format": "corpus-manifest-v1", "name": "toy", "documents": n_docs, "words": words}
    path.write_text(
        "\n".join(json.dumps(r) for r in [header, *records]) + "\n", encoding="utf-8"
    )
    return path


@pytest.fixture
def toy_corpus(tmp_path) -> Path:
    return write_toy_corpus(tmp_path / "corpus.jsonl")
