"""Quantitative comparison of curricula and training logs.

Composition timelines slice a manifest's flattened document sequence into
word-balanced segments and track the stage distribution per segment; pairs of
timelines are compared with the mean symmetrized-KL divergence (natural log).
Orderings are compared per epoch with tie-aware Kendall tau-b; score series
with Spearman rank correlation; loss logs are condensed into the running-min
loss ratio, a training-instability indicator.

``kendall_tau_b`` is the O(n log n) kernel on paired rank/score sequences;
``order_tau_b`` maps two doc_id lists onto it: truncate the longer list, rank
every document by first occurrence, and give documents absent from one list a
shared past-the-end rank. All functions are pure.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import STAGES, Corpus
from .curricula import CurriculumManifest, balanced_partition_bounds

DEFAULT_SEGMENTS = 1000
JSD_EPS = 1e-10


class AnalysisError(ValueError):
    pass


# ---------------------------------------------------------------------------
# composition timelines and divergence

@dataclass
class CompositionTimeline:
    """Per-segment stage distribution; rows are valid distributions over STAGES."""

    shares: np.ndarray  # (n_segments, len(STAGES)) float64, row-stochastic
    stages: tuple[str, ...] = STAGES

    def __post_init__(self) -> None:
        self.shares = np.asarray(self.shares, dtype=np.float64)
        if self.shares.ndim != 2 or self.shares.shape[1] != len(self.stages):
            raise AnalysisError(f"shares must be (n, {len(self.stages)}), got {self.shares.shape}")

    @property
    def n_segments(self) -> int:
        return self.shares.shape[0]


def composition_timeline(
    manifest: CurriculumManifest,
    corpus: Corpus,
    n_segments: int = DEFAULT_SEGMENTS,
    by_words: bool = True,
) -> CompositionTimeline:
    """Stage mix over training time.

    The manifest is flattened to one document sequence and cut into contiguous
    word-balanced segments (count-balanced with by_words=False); each segment's
    stage shares are weighted by word count.
    """
    flat = [doc_id for epoch in manifest.epochs for doc_id in epoch]
    if not flat:
        raise AnalysisError("empty manifest")
    if n_segments > len(flat):
        raise AnalysisError(f"n_segments={n_segments} exceeds total documents {len(flat)}")
    by_id = corpus.by_id
    weights = [by_id[i].word_count if by_words else 1 for i in flat]
    bounds = balanced_partition_bounds(weights, n_segments)
    stage_idx = {s: k for k, s in enumerate(STAGES)}
    shares = np.zeros((n_segments, len(STAGES)), dtype=np.float64)
    start = 0
    for seg, end in enumerate(bounds):
        for i in flat[start:end]:
            doc = by_id[i]
            shares[seg, stage_idx[doc.stage]] += doc.word_count
        total = shares[seg].sum()
        shares[seg] /= total
        start = end
    return CompositionTimeline(shares=shares)


def jsd_mean(a: CompositionTimeline, b: CompositionTimeline, eps: float = JSD_EPS) -> float:
    """Mean over segments of the symmetrized KL divergence, in nats.

    Zero cells are replaced by eps and rows renormalized, since KL is undefined
    on zeros. Symmetric by construction; 0 iff the timelines are identical.
    """
    if a.shares.shape != b.shares.shape:
        raise AnalysisError(f"shape mismatch: {a.shares.shape} vs {b.shares.shape}")
    p = _smooth(a.shares, eps)
    q = _smooth(b.shares, eps)
    kl_pq = np.sum(p * np.log(p / q), axis=1)
    kl_qp = np.sum(q * np.log(q / p), axis=1)
    return float(np.mean((kl_pq + kl_qp) / 2.0))


def _smooth(shares: np.ndarray, eps: float) -> np.ndarray:
    out = np.where(shares <= 0.0, eps, shares)
    return out / out.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# rank correlations

def _tie_pairs(values: Sequence) -> int:
    return sum(c * (c - 1) // 2 for c in Counter(values).values())


def _count_strict_inversions(values: Sequence[float]) -> int:
    """Pairs (i < j) with values[i] > values[j], via a Fenwick tree; O(n log n)."""
    ranks = {v: r for r, v in enumerate(sorted(set(values)), start=1)}
    tree = [0] * (len(ranks) + 1)

    def update(pos: int) -> None:
        while pos < len(tree):
            tree[pos] += 1
            pos += pos & -pos

    def query(pos: int) -> int:  # count of inserted values with rank <= pos
        s = 0
        while pos > 0:
            s += tree[pos]
            pos -= pos & -pos
        return s

    inversions = 0
    for seen, v in enumerate(values):
        r = ranks[v]
        inversions += seen - query(r)
        update(r)
    return inversions


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Tie-aware Kendall rank correlation of two paired sequences.

    Returns None when every pair is tied in one variable (the denominator is
    zero and the coefficient undefined). O(n log n): sort by (x, y), then count
    discordant pairs as strict inversions of y.
    """
    xs, ys = list(x), list(y)
    n = len(xs)
    if n == 0:
        raise AnalysisError("empty input")
    if len(ys) != n:
        raise AnalysisError(f"length mismatch: {n} vs {len(ys)}")
    n0 = n * (n - 1) // 2
    tx = _tie_pairs(xs)
    ty = _tie_pairs(ys)
    if n0 == tx or n0 == ty:
        return None
    txy = _tie_pairs(list(zip(xs, ys)))
    order = sorted(range(n), key=lambda i: (xs[i], ys[i]))
    discordant = _count_strict_inversions([ys[i] for i in order])
    numerator = n0 - tx - ty + txy - 2 * discordant
    # One sqrt of the exact integer product keeps the untied clean cases exact.
    return numerator / math.sqrt((n0 - tx) * (n0 - ty))


def order_tau_b(a: Sequence[int], b: Sequence[int]) -> float | None:
    """Kendall tau-b between two document orderings (e.g. two manifest epochs).

    The longer list is truncated to the shorter's length. Items are the union
    of documents seen in either truncated list; a document's rank is its first
    occurrence (so repeats within a list tie), and documents absent from one
    list share the past-the-end rank n+1 there.
    """
    if not a or not b:
        raise AnalysisError("empty input")
    n = min(len(a), len(b))
    a, b = list(a)[:n], list(b)[:n]
    rank_a: dict[int, int] = {}
    for pos, doc in enumerate(a, start=1):
        rank_a.setdefault(doc, pos)
    rank_b: dict[int, int] = {}
    for pos, doc in enumerate(b, start=1):
        rank_b.setdefault(doc, pos)
    universe = sorted(set(rank_a) | set(rank_b))
    sentinel = n + 1
    x = [rank_a.get(doc, sentinel) for doc in universe]
    y = [rank_b.get(doc, sentinel) for doc in universe]
    return kendall_tau_b(x, y)


def manifest_tau_b(a: CurriculumManifest, b: CurriculumManifest) -> tuple[list[float | None], float | None]:
    """Per-epoch tau-b over the common epoch range, plus the mean of defined values."""
    n_epochs = min(a.n_epochs, b.n_epochs)
    if n_epochs == 0:
        raise AnalysisError("manifests share no epochs")
    per_epoch = [order_tau_b(a.epochs[k], b.epochs[k]) for k in range(n_epochs)]
    defined = [t for t in per_epoch if t is not None]
    return per_epoch, (sum(defined) / len(defined) if defined else None)


def _midranks(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=np.float64)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation of midranks; None for a constant series (undefined)."""
    if len(x) != len(y):
        raise AnalysisError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise AnalysisError("need at least 2 points")
    rx = _midranks(x)
    ry = _midranks(y)
    if np.all(rx == rx[0]) or np.all(ry == ry[0]):
        return None
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float((rx @ ry) / math.sqrt((rx @ rx) * (ry @ ry)))


# ---------------------------------------------------------------------------
# loss trajectories

@dataclass(frozen=True)
class LossSeries:
    steps: tuple[int, ...]
    losses: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.steps) != len(self.losses):
            raise AnalysisError("steps and losses differ in length")
        if not self.steps:
            raise AnalysisError("empty loss series")
        for prev, cur in zip(self.steps, self.steps[1:]):
            if cur <= prev:
                raise AnalysisError(f"steps not strictly increasing at {cur}")
        for s, l in zip(self.steps, self.losses):
            if not (l > 0):
                raise AnalysisError(f"non-positive loss {l} at step {s}")


def loss_ratio(series: LossSeries) -> np.ndarray:
    """Loss divided by the lowest loss at any earlier step; first step is 1.0.

    The minimum over an empty prefix is undefined, so the first value is fixed
    at 1.0 by convention. Single forward pass over the series.
    """
    losses = np.asarray(series.losses, dtype=np.float64)
    out = np.empty(len(losses), dtype=np.float64)
    out[0] = 1.0
    if len(losses) > 1:
        prior_min = np.minimum.accumulate(losses)[:-1]
        out[1:] = losses[1:] / prior_min
    return out


def load_loss_log(path: str | Path) -> LossSeries:
    """Parse a 'step loss' per line text log; '#' lines are comments."""
    path = Path(path)
    if not path.exists():
        raise AnalysisError(f"loss log not found: {path}")
    steps: list[int] = []
    losses: list[float] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise AnalysisError(f"{path}: line {lineno}: expected 'step loss'")
        steps.append(int(parts[0]))
        losses.append(float(parts[1]))
    return LossSeries(steps=tuple(steps), losses=tuple(losses))


def save_loss_ratio(series: LossSeries, ratios: np.ndarray, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("# step\tloss\tloss_ratio\n")
        for s, l, r in zip(series.steps, series.losses, ratios):
            fh.write(f"{s}\t{l!r}\t{float(r)!r}\n")
