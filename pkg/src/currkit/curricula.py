"""Deterministic training-order manifests.

Fourteen ordering strategies compile a corpus plus difficulty scores into an
explicit epochs-of-doc_ids schedule under a global word budget. Builders are
pure functions of (corpus, scores, params, seed): every random draw comes from
a stream derived from (seed, strategy, epoch index), so one epoch can be
regenerated without replaying the rest and identical inputs rebuild
byte-identical manifests.

Strategy families and their coverage classes:

    epoch-wise (each non-truncated epoch is a full permutation of the corpus):
        random            independent shuffle per pass
        sorted_desc/asc   per-epoch sort by that checkpoint's influence column
        block_desc/asc    sorted, then shuffled inside fixed-size blocks
        conv_block_desc/asc  same, over the lognormal-convolved matrix
        mattr             ascending windowed type-token ratio, static order
        unigram_ppl       ascending unigram perplexity, static order
        alternating       word-balanced segments by aggregate influence,
                          visited high/low/next-high/... with fresh shuffles
    retained-multiset:
        top_half          keep the most influential fraction per epoch and
                          cycle it until the full-corpus word count is covered
    cumulative (epochs partition the corpus):
        segments_desc/asc word-balanced segments of the aggregate ordering,
                          one segment per epoch
    stage-wise:
        source_stages     fixed stage order, a few shuffled epochs per stage

Manifest file format (little-endian):

    bytes 0..3   magic  b"CMAN"
    bytes 4..7   format version (uint32, currently 1)
    bytes 8..11  header length L (uint32)
    L bytes      UTF-8 JSON header: strategy, seed, params, budget,
                 corpus_name, corpus_hash, word_counts, truncated, warnings
    uint32       n_epochs
    per epoch    uint32 length, then uint64 doc_ids

The plain-text export (one doc_id per line, '# epoch k' separators) exists for
diffing and external consumers.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, replace
from itertools import cycle
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import STAGES, Corpus, corpus_hash
from .influence import AggregateInfluence, InfluenceMatrix
from .seeding import derive_rng

DEFAULT_BUDGET = 100_000_000
DEFAULT_EPOCHS = 10
DEFAULT_BLOCK_SIZE = 1000
DEFAULT_SEGMENTS = 10
DEFAULT_KEEP_FRACTION = 0.5
DEFAULT_EPOCHS_PER_STAGE = 2

STRATEGIES = (
    "random",
    "source_stages",
    "mattr",
    "unigram_ppl",
    "sorted_desc",
    "sorted_asc",
    "block_desc",
    "block_asc",
    "conv_block_desc",
    "conv_block_asc",
    "top_half",
    "segments_desc",
    "segments_asc",
    "alternating",
)

EPOCH_WISE = frozenset(
    {
        "random",
        "mattr",
        "unigram_ppl",
        "sorted_desc",
        "sorted_asc",
        "block_desc",
        "block_asc",
        "conv_block_desc",
        "conv_block_asc",
        "alternating",
    }
)
CUMULATIVE = frozenset({"segments_desc", "segments_asc"})

MANIFEST_MAGIC = b"CMAN"
MANIFEST_VERSION = 1
_MANIFEST_HEADER = struct.Struct("<4sII")


class CurriculumError(ValueError):
    pass


@dataclass(frozen=True)
class CurriculumManifest:
    strategy: str
    seed: int
    params: dict
    budget: int
    corpus_name: str
    corpus_hash: str
    epochs: tuple[tuple[int, ...], ...]
    word_counts: tuple[int, ...]
    truncated: bool = False
    warnings: tuple[str, ...] = ()

    @property
    def total_words(self) -> int:
        return sum(self.word_counts)

    @property
    def n_epochs(self) -> int:
        return len(self.epochs)


@dataclass
class StrategySpec:
    """Parameter record for one strategy; defaults are the standard configuration."""

    strategy: str
    epochs: int = DEFAULT_EPOCHS
    block_size: int = DEFAULT_BLOCK_SIZE
    segments: int = DEFAULT_SEGMENTS
    keep_fraction: float = DEFAULT_KEEP_FRACTION
    epochs_per_stage: int = DEFAULT_EPOCHS_PER_STAGE
    mu: float = 0.0
    sigma: float = 1.0
    single_shuffle: bool = False
    start_high: bool = True
    stage_order: tuple[str, ...] = STAGES

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise CurriculumError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class ValidationReport:
    strategy: str
    violations: tuple[str, ...]
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# scoring helpers

ScoreSource = Mapping[int, float] | InfluenceMatrix | AggregateInfluence


def _epoch_scores(scores: ScoreSource, epoch: int) -> Mapping[int, float]:
    """Resolve the score map for one epoch: matrix columns advance per epoch."""
    if isinstance(scores, InfluenceMatrix):
        if epoch >= scores.n_checkpoints:
            raise CurriculumError(
                f"epoch {epoch} has no checkpoint column (matrix has {scores.n_checkpoints})"
            )
        return scores.column_scores(epoch)
    if isinstance(scores, AggregateInfluence):
        return scores.as_scores()
    return scores


def _sorted_ids(corpus: Corpus, score_map: Mapping[int, float], direction: str) -> list[int]:
    """Total order: score in the given direction, ties by doc_id ascending."""
    if direction not in ("asc", "desc"):
        raise CurriculumError(f"direction must be 'asc' or 'desc', got {direction!r}")
    missing = [d.doc_id for d in corpus.documents if d.doc_id not in score_map]
    if missing:
        raise CurriculumError(f"missing score for doc_id {missing[0]}")
    sign = -1.0 if direction == "desc" else 1.0
    return sorted(corpus.doc_ids, key=lambda i: (sign * score_map[i], i))


def balanced_partition_bounds(weights: Sequence[int], m: int) -> list[int]:
    """Cut points for m contiguous segments with near-equal weight.

    Returns end indices b_1 < ... < b_m == len(weights); segment k covers
    [b_{k-1}, b_k). Each boundary is placed at the first item where the
    cumulative weight reaches k/m of the total, clamped so every segment keeps
    at least one item. With m <= len(weights) every segment is non-empty and
    off-balance is bounded by the largest single weight.
    """
    n = len(weights)
    if not 1 <= m <= n:
        raise CurriculumError(f"cannot cut {n} items into {m} segments")
    total = sum(weights)
    prefix = [0]
    for w in weights:
        prefix.append(prefix[-1] + w)
    bounds: list[int] = []
    start = 0
    for k in range(m):
        cut = total * (k + 1) / m
        j = start + 1
        j_max = n - (m - 1 - k)
        while j < j_max and prefix[j] < cut:
            j += 1
        bounds.append(j)
        start = j
    return bounds


def _segments_of(corpus: Corpus, ordered_ids: list[int], m: int) -> list[list[int]]:
    weights = [corpus.by_id[i].word_count for i in ordered_ids]
    bounds = balanced_partition_bounds(weights, m)
    segs, start = [], 0
    for b in bounds:
        segs.append(ordered_ids[start:b])
        start = b
    return segs


def _shuffled(ids: Sequence[int], rng) -> tuple[int, ...]:
    return tuple(ids[int(i)] for i in rng.permutation(len(ids)))


def _word_counts(corpus: Corpus, epochs: Sequence[Sequence[int]]) -> tuple[int, ...]:
    by_id = corpus.by_id
    return tuple(sum(by_id[i].word_count for i in epoch) for epoch in epochs)


def _finish(
    corpus: Corpus,
    strategy: str,
    seed: int,
    params: dict,
    budget: int,
    epochs: Sequence[Sequence[int]],
    warnings: Sequence[str] = (),
) -> CurriculumManifest:
    manifest = CurriculumManifest(
        strategy=strategy,
        seed=int(seed),
        params=params,
        budget=int(budget),
        corpus_name=corpus.name,
        corpus_hash=corpus_hash(corpus),
        epochs=tuple(tuple(int(i) for i in ep) for ep in epochs),
        word_counts=_word_counts(corpus, epochs),
        warnings=tuple(warnings),
    )
    return enforce_budget(manifest, budget, corpus)


# ---------------------------------------------------------------------------
# builders

def build_random(
    corpus: Corpus,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    single_shuffle: bool = False,
) -> CurriculumManifest:
    """Independent seeded shuffle per pass; single_shuffle reuses the first order."""
    if epochs < 1:
        raise CurriculumError(f"epochs must be >= 1, got {epochs}")
    ids = list(corpus.doc_ids)
    out = []
    for e in range(epochs):
        rng = derive_rng(seed, "random", 0 if single_shuffle else e)
        out.append(_shuffled(ids, rng))
    params = {"epochs": epochs, "single_shuffle": single_shuffle}
    return _finish(corpus, "random", seed, params, budget, out)


def build_sorted(
    corpus: Corpus,
    scores: ScoreSource,
    direction: str,
    epochs: int = DEFAULT_EPOCHS,
    budget: int = DEFAULT_BUDGET,
    strategy: str | None = None,
    seed: int = 0,
) -> CurriculumManifest:
    """Epoch t = full corpus sorted by that epoch's score in the given direction.

    A matrix score source advances one column per epoch; a plain map (static
    heuristic scores) repeats. No randomness is involved; the seed is recorded
    for uniformity only.
    """
    if epochs < 1:
        raise CurriculumError(f"epochs must be >= 1, got {epochs}")
    strategy = strategy or ("sorted_desc" if direction == "desc" else "sorted_asc")
    out = [tuple(_sorted_ids(corpus, _epoch_scores(scores, e), direction)) for e in range(epochs)]
    params = {"epochs": epochs, "direction": direction}
    return _finish(corpus, strategy, seed, params, budget, out)


def build_block_shuffled(
    corpus: Corpus,
    scores: ScoreSource,
    direction: str,
    block_size: int = DEFAULT_BLOCK_SIZE,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    strategy: str | None = None,
) -> CurriculumManifest:
    """Sorted order cut into consecutive blocks, each shuffled in place."""
    if block_size < 1:
        raise CurriculumError(f"block_size must be >= 1, got {block_size}")
    if epochs < 1:
        raise CurriculumError(f"epochs must be >= 1, got {epochs}")
    strategy = strategy or ("block_desc" if direction == "desc" else "block_asc")
    out = []
    for e in range(epochs):
        order = _sorted_ids(corpus, _epoch_scores(scores, e), direction)
        rng = derive_rng(seed, strategy, e)
        epoch: list[int] = []
        for start in range(0, len(order), block_size):
            epoch.extend(_shuffled(order[start : start + block_size], rng))
        out.append(tuple(epoch))
    params = {"epochs": epochs, "direction": direction, "block_size": block_size}
    return _finish(corpus, strategy, seed, params, budget, out)


def build_filtered_topk(
    corpus: Corpus,
    phi: InfluenceMatrix,
    keep_fraction: float = DEFAULT_KEEP_FRACTION,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> CurriculumManifest:
    """Keep the most influential fraction per epoch, repeating to hold word count.

    Per epoch: rank by that checkpoint's column descending, retain the top
    ceil(keep_fraction * |D|), shuffle the retained set once, then cycle
    through it appending documents until the epoch's word count first reaches
    the full-corpus word count. Epoch words land in
    [corpus_words, corpus_words + max_doc_words).
    """
    if not 0 < keep_fraction <= 1:
        raise CurriculumError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    if epochs < 1:
        raise CurriculumError(f"epochs must be >= 1, got {epochs}")
    n = len(corpus)
    k = math.ceil(keep_fraction * n)
    if k < 1:
        raise CurriculumError("retained set is empty")
    target = corpus.total_words
    by_id = corpus.by_id
    out = []
    for e in range(epochs):
        ranked = _sorted_ids(corpus, _epoch_scores(phi, e), "desc")
        retained = ranked[:k]
        rng = derive_rng(seed, "top_half", e)
        shuffled = _shuffled(retained, rng)
        epoch: list[int] = []
        words = 0
        for doc_id in cycle(shuffled):
            if words >= target:
                break
            epoch.append(doc_id)
            words += by_id[doc_id].word_count
        out.append(tuple(epoch))
    params = {"epochs": epochs, "keep_fraction": keep_fraction}
    return _finish(corpus, "top_half", seed, params, budget, out)


def build_cumulative_segments(
    corpus: Corpus,
    agg: AggregateInfluence | Mapping[int, float],
    m: int = DEFAULT_SEGMENTS,
    direction: str = "desc",
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> CurriculumManifest:
    """Aggregate ordering cut into m word-balanced segments, one epoch each.

    Exactly m epochs; every document appears in exactly one of them.
    """
    if m > len(corpus):
        raise CurriculumError(f"m={m} exceeds corpus size {len(corpus)}")
    strategy = "segments_desc" if direction == "desc" else "segments_asc"
    score_map = _epoch_scores(agg, 0)
    order = _sorted_ids(corpus, score_map, direction)
    segs = _segments_of(corpus, order, m)
    out = []
    for e, seg in enumerate(segs):
        rng = derive_rng(seed, strategy, e)
        out.append(_shuffled(seg, rng))
    params = {"segments": m, "direction": direction}
    return _finish(corpus, strategy, seed, params, budget, out)


def alternation_order(m: int, start_high: bool = True) -> list[int]:
    """Fixed segment visit order (1-based): m, 1, m-1, 2, ... until all used."""
    if m < 1:
        raise CurriculumError(f"m must be >= 1, got {m}")
    lo, hi = 1, m
    order: list[int] = []
    while lo <= hi:
        first, second = (hi, lo) if start_high else (lo, hi)
        order.append(first)
        if lo < hi:
            order.append(second)
        lo += 1
        hi -= 1
    return order


def build_alternating(
    corpus: Corpus,
    agg: AggregateInfluence | Mapping[int, float],
    m: int = DEFAULT_SEGMENTS,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    start_high: bool = True,
) -> CurriculumManifest:
    """Visit aggregate-influence segments high/low/next-high/... every epoch.

    Segments are the ascending word-balanced split (segment m = highest
    influence); the visit order is fixed across epochs while each segment is
    freshly shuffled before every pass, so every epoch covers the corpus.
    """
    if epochs < 1:
        raise CurriculumError(f"epochs must be >= 1, got {epochs}")
    if m > len(corpus):
        raise CurriculumError(f"m={m} exceeds corpus size {len(corpus)}")
    score_map = _epoch_scores(agg, 0)
    order = _sorted_ids(corpus, score_map, "asc")
    segs = _segments_of(corpus, order, m)
    visit = alternation_order(m, start_high=start_high)
    out = []
    for e in range(epochs):
        rng = derive_rng(seed, "alternating", e)
        epoch: list[int] = []
        for s in visit:
            epoch.extend(_shuffled(segs[s - 1], rng))
        out.append(tuple(epoch))
    params = {"epochs": epochs, "segments": m, "start_high": start_high}
    return _finish(corpus, "alternating", seed, params, budget, out)


def build_source_stages(
    corpus: Corpus,
    stage_order: Sequence[str] = STAGES,
    epochs_per_stage: int = DEFAULT_EPOCHS_PER_STAGE,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
) -> CurriculumManifest:
    """Stages in the given order, a few shuffled epochs of each stage's documents.

    Stages with no documents still emit their (empty) epochs, with a warning,
    so epoch indices stay aligned across curricula.
    """
    if epochs_per_stage < 1:
        raise CurriculumError(f"epochs_per_stage must be >= 1, got {epochs_per_stage}")
    present = {d.stage for d in corpus.documents}
    missing = present - set(stage_order)
    if missing:
        raise CurriculumError(f"corpus stage {sorted(missing)[0]} not in stage_order")
    out = []
    warnings: list[str] = []
    k = 0
    for stage in stage_order:
        stage_ids = [d.doc_id for d in corpus.documents if d.stage == stage]
        for _ in range(epochs_per_stage):
            rng = derive_rng(seed, "source_stages", k)
            out.append(_shuffled(stage_ids, rng))
            if not stage_ids:
                warnings.append(f"epoch {k}: stage {stage} has no documents")
            k += 1
    params = {"epochs_per_stage": epochs_per_stage, "stage_order": list(stage_order)}
    return _finish(corpus, "source_stages", seed, params, budget, out, warnings)


def enforce_budget(manifest: CurriculumManifest, max_words: int, corpus: Corpus) -> CurriculumManifest:
    """Truncate at document granularity so cumulative words <= max_words.

    Never splits a document: the epoch where the budget runs out keeps its
    prefix, later epochs are dropped.
    """
    if manifest.total_words <= max_words:
        return manifest
    by_id = corpus.by_id
    kept: list[tuple[int, ...]] = []
    words = 0
    for epoch in manifest.epochs:
        partial: list[int] = []
        for doc_id in epoch:
            wc = by_id[doc_id].word_count
            if words + wc > max_words:
                if partial:
                    kept.append(tuple(partial))
                return replace(
                    manifest,
                    epochs=tuple(kept),
                    word_counts=_word_counts(corpus, kept),
                    truncated=True,
                )
            partial.append(doc_id)
            words += wc
        kept.append(tuple(partial))
    return replace(
        manifest, epochs=tuple(kept), word_counts=_word_counts(corpus, kept), truncated=True
    )


# ---------------------------------------------------------------------------
# validation

def _check_permutation(epoch: Sequence[int], ids: Sequence[int]) -> bool:
    return len(epoch) == len(ids) and sorted(epoch) == sorted(ids)


def validate_manifest(manifest: CurriculumManifest, corpus: Corpus) -> ValidationReport:
    """Check every invariant of the manifest's strategy class; never raises."""
    violations: list[str] = []
    warnings: list[str] = list(manifest.warnings)
    by_id = corpus.by_id

    if manifest.strategy not in STRATEGIES:
        violations.append(f"unknown strategy {manifest.strategy!r}")
        return ValidationReport(manifest.strategy, tuple(violations), tuple(warnings))
    if manifest.corpus_hash != corpus_hash(corpus):
        violations.append("corpus hash mismatch: manifest built from a different corpus")
        return ValidationReport(manifest.strategy, tuple(violations), tuple(warnings))

    unknown = {i for ep in manifest.epochs for i in ep} - set(by_id)
    if unknown:
        violations.append(f"doc_id {sorted(unknown)[0]} not in corpus")
        return ValidationReport(manifest.strategy, tuple(violations), tuple(warnings))

    recomputed = _word_counts(corpus, manifest.epochs)
    if recomputed != manifest.word_counts:
        violations.append("word_counts do not match document word counts")
    if sum(recomputed) > manifest.budget:
        violations.append(f"budget exceeded: {sum(recomputed)} > {manifest.budget}")

    # With truncation only the last surviving epoch may be partial.
    full_epochs = list(manifest.epochs)
    partial: tuple[int, ...] | None = None
    if manifest.truncated and full_epochs:
        partial = full_epochs.pop()

    ids = corpus.doc_ids
    if manifest.strategy in EPOCH_WISE:
        for k, epoch in enumerate(full_epochs):
            if not _check_permutation(epoch, ids):
                violations.append(f"epoch {k} not a permutation of the corpus")
        if partial is not None and len(set(partial)) != len(partial):
            violations.append("truncated epoch repeats a document")
    elif manifest.strategy in CUMULATIVE:
        seen: dict[int, int] = {}
        for k, epoch in enumerate(manifest.epochs):
            for i in epoch:
                if i in seen:
                    violations.append(f"partition violated: doc {i} in epochs {seen[i]} and {k}")
                    break
                seen[i] = k
            else:
                continue
            break
        if not manifest.truncated and set(seen) != set(ids):
            violations.append("partition violated: epochs do not cover the corpus")
    elif manifest.strategy == "top_half":
        keep = manifest.params.get("keep_fraction", DEFAULT_KEEP_FRACTION)
        limit = math.ceil(keep * len(corpus))
        lo, hi = corpus.total_words, corpus.total_words + corpus.max_doc_words
        for k, epoch in enumerate(full_epochs):
            if len(set(epoch)) > limit:
                violations.append(f"epoch {k} retains {len(set(epoch))} docs, limit {limit}")
            words = recomputed[k] if k < len(recomputed) else 0
            if not lo <= words < hi:
                violations.append(
                    f"epoch {k} word count {words} outside [{lo}, {hi}) word-conservation window"
                )
    elif manifest.strategy == "source_stages":
        stage_order = manifest.params.get("stage_order", list(STAGES))
        eps = manifest.params.get("epochs_per_stage", DEFAULT_EPOCHS_PER_STAGE)
        stage_ids = {
            s: [d.doc_id for d in corpus.documents if d.stage == s] for s in stage_order
        }
        for k, epoch in enumerate(full_epochs):
            stage = stage_order[k // eps] if k // eps < len(stage_order) else None
            if stage is None:
                violations.append(f"epoch {k} beyond stage schedule")
            elif not _check_permutation(epoch, stage_ids[stage]):
                violations.append(f"epoch {k} not a permutation of stage {stage}")

    return ValidationReport(manifest.strategy, tuple(violations), tuple(warnings))


# ---------------------------------------------------------------------------
# manifest I/O

def save_manifest(manifest: CurriculumManifest, path: str | Path) -> None:
    path = Path(path)
    header = {
        "strategy": manifest.strategy,
        "seed": manifest.seed,
        "params": manifest.params,
        "budget": manifest.budget,
        "corpus_name": manifest.corpus_name,
        "corpus_hash": manifest.corpus_hash,
        "word_counts": list(manifest.word_counts),
        "truncated": manifest.truncated,
        "warnings": list(manifest.warnings),
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(_MANIFEST_HEADER.pack(MANIFEST_MAGIC, MANIFEST_VERSION, len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", manifest.n_epochs))
        for epoch in manifest.epochs:
            fh.write(struct.pack("<I", len(epoch)))
            fh.write(b"".join(struct.pack("<Q", i) for i in epoch))


def load_manifest(path: str | Path) -> CurriculumManifest:
    path = Path(path)
    if not path.exists():
        raise CurriculumError(f"manifest not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _MANIFEST_HEADER.size:
        raise CurriculumError(f"{path}: truncated header")
    magic, version, blob_len = _MANIFEST_HEADER.unpack_from(raw)
    if magic != MANIFEST_MAGIC:
        raise CurriculumError(f"{path}: bad magic {magic!r}")
    if version != MANIFEST_VERSION:
        raise CurriculumError(f"{path}: version mismatch (file {version})")
    offset = _MANIFEST_HEADER.size
    header = json.loads(raw[offset : offset + blob_len].decode("utf-8"))
    offset += blob_len
    (n_epochs,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    epochs: list[tuple[int, ...]] = []
    for _ in range(n_epochs):
        (length,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        ids = struct.unpack_from(f"<{length}Q", raw, offset)
        offset += 8 * length
        epochs.append(tuple(int(i) for i in ids))
    if offset != len(raw):
        raise CurriculumError(f"{path}: {len(raw) - offset} trailing bytes")
    return CurriculumManifest(
        strategy=header["strategy"],
        seed=header["seed"],
        params=header["params"],
        budget=header["budget"],
        corpus_name=header["corpus_name"],
        corpus_hash=header["corpus_hash"],
        epochs=tuple(epochs),
        word_counts=tuple(header["word_counts"]),
        truncated=header["truncated"],
        warnings=tuple(header["warnings"]),
    )


def export_manifest_text(manifest: CurriculumManifest, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(
            f"# strategy={manifest.strategy} seed={manifest.seed} "
            f"budget={manifest.budget} corpus={manifest.corpus_name}\n"
        )
        for k, epoch in enumerate(manifest.epochs):
            fh.write(f"# epoch {k} ({manifest.word_counts[k]} words)\n")
            for doc_id in epoch:
                fh.write(f"{doc_id}\n")


# ---------------------------------------------------------------------------
# dispatch

def build_strategy(
    corpus: Corpus,
    spec: StrategySpec,
    seed: int,
    budget: int = DEFAULT_BUDGET,
    phi: InfluenceMatrix | None = None,
    phi_conv: InfluenceMatrix | None = None,
    agg: AggregateInfluence | None = None,
    heuristic_scores: Mapping[int, tuple[float, float]] | None = None,
) -> CurriculumManifest:
    """Build one manifest from whichever inputs the strategy needs."""
    s = spec.strategy

    def need(value, what):
        if value is None:
            raise CurriculumError(f"strategy {s!r} requires {what}")
        return value

    if s == "random":
        return build_random(corpus, spec.epochs, seed, budget, spec.single_shuffle)
    if s == "source_stages":
        return build_source_stages(corpus, spec.stage_order, spec.epochs_per_stage, seed, budget)
    if s in ("mattr", "unigram_ppl"):
        table = need(heuristic_scores, "a heuristic score table")
        col = 0 if s == "mattr" else 1
        static = {doc_id: vals[col] for doc_id, vals in table.items()}
        return build_sorted(corpus, static, "asc", spec.epochs, budget, strategy=s, seed=seed)
    if s in ("sorted_desc", "sorted_asc"):
        direction = "desc" if s.endswith("desc") else "asc"
        return build_sorted(corpus, need(phi, "an influence matrix"), direction, spec.epochs, budget, seed=seed)
    if s in ("block_desc", "block_asc"):
        direction = "desc" if s.endswith("desc") else "asc"
        return build_block_shuffled(
            corpus, need(phi, "an influence matrix"), direction, spec.block_size, spec.epochs, seed, budget
        )
    if s in ("conv_block_desc", "conv_block_asc"):
        direction = "desc" if s.endswith("desc") else "asc"
        return build_block_shuffled(
            corpus,
            need(phi_conv, "a convolved influence matrix"),
            direction,
            spec.block_size,
            spec.epochs,
            seed,
            budget,
            strategy=s,
        )
    if s == "top_half":
        return build_filtered_topk(
            corpus, need(phi, "an influence matrix"), spec.keep_fraction, spec.epochs, seed, budget
        )
    if s in ("segments_desc", "segments_asc"):
        direction = "desc" if s.endswith("desc") else "asc"
        return build_cumulative_segments(
            corpus, need(agg, "an aggregate influence vector"), spec.segments, direction, seed, budget
        )
    if s == "alternating":
        return build_alternating(
            corpus,
            need(agg, "an aggregate influence vector"),
            spec.segments,
            spec.epochs,
            seed,
            budget,
            spec.start_high,
        )
    raise CurriculumError(f"unknown strategy {s!r}")
