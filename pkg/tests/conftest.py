"""Shared fixtures: synthetic corpora and synthetic gradient sets."""

from __future__ import annotations

import numpy as np
import pytest

from currkit.corpus import STAGES, Corpus, Document
from currkit.gradstore import CheckpointGradients, CheckpointSet
from currkit.seeding import derive_rng


def make_corpus(
    n_docs: int,
    seed: int = 0,
    name: str = "synth",
    min_words: int = 3,
    max_words: int = 40,
    vocab: int = 200,
    stages: tuple[str, ...] = STAGES,
) -> Corpus:
    """Stage-labeled corpus with varied lengths and token mixes."""
    rng = derive_rng(seed, "synth-corpus")
    docs = []
    for i in range(n_docs):
        stage = stages[i % len(stages)]
        n = int(rng.integers(min_words, max_words + 1))
        tokens = tuple(f"tok{int(t)}" for t in rng.integers(0, vocab, n))
        docs.append(Document(doc_id=i, source=f"src_{stage}", stage=stage, tokens=tokens))
    return Corpus(name=name, documents=tuple(docs))


def uniform_corpus(n_docs: int, words: int = 10, stage: str = "C1", name: str = "uniform") -> Corpus:
    """Every document the same length; handy for exact word arithmetic."""
    docs = tuple(
        Document(i, "src", stage, tuple(f"w{i}_{j}" for j in range(words))) for i in range(n_docs)
    )
    return Corpus(name=name, documents=docs)


def random_gradients(n: int, d: int, seed: int, checkpoint_index: int = 1) -> CheckpointGradients:
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n, d))
    return CheckpointGradients(checkpoint_index=checkpoint_index, rows=rows, doc_ids=tuple(range(n)))


def random_checkpoint_set(n: int, d: int, T: int, seed: int) -> CheckpointSet:
    rng = np.random.default_rng(seed)
    cks = tuple(
        CheckpointGradients(t + 1, rng.normal(size=(n, d)), tuple(range(n))) for t in range(T)
    )
    return CheckpointSet(checkpoints=cks, eta=(1.0,) * T)


def two_cluster_gradients(
    seed: int,
    n_major: int = 90,
    n_minor: int = 10,
    d: int = 16,
    center_cos: float = 0.1,
    noise_norm: float = 0.1,
) -> tuple[CheckpointGradients, np.ndarray]:
    """Two isotropic gradient clusters around unit centers with bounded cosine.

    Returns the gradient set and a boolean mask marking majority rows. Rows
    0..n_major-1 sit near center A, the rest near center B with
    cos(A, B) == center_cos; per-row noise has norm <= noise_norm.
    """
    rng = np.random.default_rng(seed)
    a = np.zeros(d)
    a[0] = 1.0
    b = np.zeros(d)
    b[0] = center_cos
    b[1] = np.sqrt(1.0 - center_cos**2)
    rows = []
    for i in range(n_major + n_minor):
        center = a if i < n_major else b
        noise = rng.normal(size=d)
        noise *= (noise_norm * rng.uniform(0.2, 1.0)) / np.linalg.norm(noise)
        rows.append(center + noise)
    grads = CheckpointGradients(1, np.array(rows), tuple(range(n_major + n_minor)))
    mask = np.arange(n_major + n_minor) < n_major
    return grads, mask


@pytest.fixture
def small_corpus() -> Corpus:
    return make_corpus(30, seed=7, name="small")


@pytest.fixture
def staged_corpus() -> Corpus:
    return make_corpus(100, seed=11, name="staged")
