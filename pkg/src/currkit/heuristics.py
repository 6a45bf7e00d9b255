"""Model-agnostic difficulty scores: windowed type-token ratio and unigram perplexity.

Both scorers are pure functions; ties in any downstream sort are broken by
doc_id. The unigram model is trained once on the full corpus and frozen, with
add-alpha smoothing over the vocabulary plus a single unknown slot.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Corpus


class HeuristicsError(ValueError):
    pass


def mattr(tokens: Sequence[str], window: int = 5) -> float:
    """Moving-average type-token ratio: mean distinct fraction over sliding windows.

    Sequences shorter than the window get the whole-sequence TTR so short
    documents still receive a score.
    """
    if not tokens:
        raise HeuristicsError("empty token sequence")
    if window < 1:
        raise HeuristicsError(f"window must be >= 1, got {window}")
    n = len(tokens)
    if n < window:
        return len(set(tokens)) / n
    counts = Counter(tokens[:window])
    distinct = len(counts)
    acc = distinct
    for i in range(window, n):
        old = tokens[i - window]
        counts[old] -= 1
        if counts[old] == 0:
            del counts[old]
            distinct -= 1
        new = tokens[i]
        if counts[new] == 0:
            distinct += 1
        counts[new] += 1
        acc += distinct
    return acc / (window * (n - window + 1))


@dataclass(frozen=True)
class UnigramModel:
    counts: Mapping[str, int]
    total: int
    alpha: float

    @property
    def vocab_size(self) -> int:
        return len(self.counts)

    def prob(self, token: str) -> float:
        """Add-alpha probability; unknown tokens use the single unknown slot."""
        count = self.counts.get(token, 0)
        if count == 0 and self.alpha == 0:
            raise HeuristicsError(f"zero-probability token {token!r} (alpha=0)")
        return (count + self.alpha) / (self.total + self.alpha * (self.vocab_size + 1))


def train_unigram(corpus: Corpus, alpha: float = 1.0) -> UnigramModel:
    if alpha < 0:
        raise HeuristicsError(f"alpha must be non-negative, got {alpha}")
    counts: Counter[str] = Counter()
    for doc in corpus.documents:
        counts.update(doc.tokens)
    return UnigramModel(counts=dict(counts), total=sum(counts.values()), alpha=alpha)


def perplexity(model: UnigramModel, tokens: Sequence[str]) -> float:
    """exp of the average negative log-probability; >= 1 by construction."""
    if not tokens:
        raise HeuristicsError("empty token sequence")
    log_sum = math.fsum(math.log(model.prob(t)) for t in tokens)
    return math.exp(-log_sum / len(tokens))


def score_corpus(
    corpus: Corpus, window: int = 5, alpha: float = 1.0
) -> dict[int, tuple[float, float]]:
    """doc_id -> (mattr, unigram perplexity) over the corpus's own unigram model."""
    model = train_unigram(corpus, alpha=alpha)
    return {
        d.doc_id: (mattr(d.tokens, window=window), perplexity(model, d.tokens))
        for d in corpus.documents
    }


def write_score_table(scores: Mapping[int, tuple[float, float]], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("doc_id\tmattr\tunigram_ppl\n")
        for doc_id in sorted(scores):
            m, p = scores[doc_id]
            fh.write(f"{doc_id}\t{m!r}\t{p!r}\n")


def load_score_table(path: str | Path) -> dict[int, tuple[float, float]]:
    path = Path(path)
    if not path.exists():
        raise HeuristicsError(f"score table not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split("\t") != ["doc_id", "mattr", "unigram_ppl"]:
        raise HeuristicsError(f"{path}: not a score table")
    out: dict[int, tuple[float, float]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise HeuristicsError(f"{path}: line {lineno}: expected 3 columns")
        out[int(parts[0])] = (float(parts[1]), float(parts[2]))
    return out
