"""Average-influence scores from normalized per-document gradients.

For one checkpoint, a document's score is the dot product of its unit-norm
gradient with the mean unit-norm gradient over the whole collection, i.e. the
average cosine similarity between that document and every document in the set.
The fast path computes it in two passes: accumulate the mean (64-bit,
chunk-ordered so reruns are bit-identical), then emit one dot per row.
``pairwise_oracle`` recomputes a column as the literal O(n^2 d) mean of
pairwise dots and exists solely to verify the fast path.

Columns for all checkpoints assemble into an influence matrix (documents x
checkpoints); row sums aggregate it; a lognormal filter convolved causally
along the checkpoint axis up-weights documents whose influence persists across
checkpoints.

Influence matrix file format (little-endian, mirrors the dump header style):

    bytes 0..3    magic  b"IMTX"
    bytes 4..7    format version  (uint32, currently 1)
    bytes 8..11   n_documents  (uint32)
    bytes 12..15  n_checkpoints  (uint32)
    bytes 16..19  flags  (uint32; bit 0 = self term included)
    then          doc_ids        uint64[n_documents]
    then          checkpoint ids uint32[n_checkpoints]
    then          values         float64[n_documents * n_checkpoints], row-major
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gradstore import CheckpointGradients, CheckpointSet

IMTX_MAGIC = b"IMTX"
IMTX_VERSION = 1
_IMTX_HEADER = struct.Struct("<4sIIII")

#: Rows per accumulation chunk; fixed so the reduction order is reproducible.
CHUNK_ROWS = 1024


class InfluenceError(ValueError):
    """Invalid input to an influence computation."""


@dataclass
class InfluenceMatrix:
    values: np.ndarray  # (n_documents, n_checkpoints) float64
    doc_ids: tuple[int, ...]
    checkpoint_indices: tuple[int, ...]
    include_self: bool = True

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise InfluenceError(f"values must be 2-D, got shape {self.values.shape}")
        n, t = self.values.shape
        if len(self.doc_ids) != n:
            raise InfluenceError(f"{len(self.doc_ids)} doc_ids for {n} rows")
        if len(self.checkpoint_indices) != t:
            raise InfluenceError(f"{len(self.checkpoint_indices)} checkpoint labels for {t} columns")

    @property
    def n_documents(self) -> int:
        return self.values.shape[0]

    @property
    def n_checkpoints(self) -> int:
        return self.values.shape[1]

    def column_scores(self, column: int) -> dict[int, float]:
        """doc_id -> score map for one checkpoint column."""
        if not 0 <= column < self.n_checkpoints:
            raise InfluenceError(f"no checkpoint column {column} (have {self.n_checkpoints})")
        col = self.values[:, column]
        return {doc_id: float(col[i]) for i, doc_id in enumerate(self.doc_ids)}


@dataclass
class AggregateInfluence:
    """Per-document influence summed over the checkpoint axis."""

    values: np.ndarray  # (n_documents,) float64
    doc_ids: tuple[int, ...]

    def as_scores(self) -> dict[int, float]:
        return {doc_id: float(self.values[i]) for i, doc_id in enumerate(self.doc_ids)}


@dataclass
class LognormFilter:
    taps: np.ndarray  # (length,) float64, non-negative, sums to 1
    mu: float
    sigma: float

    def __len__(self) -> int:
        return len(self.taps)


def normalize_rows(grads: CheckpointGradients) -> CheckpointGradients:
    """Scale every row to unit Euclidean norm; zero rows stay zero.

    The zero-row count is recorded on the result rather than raised: a zero
    gradient is degenerate but processable (it contributes 0 to every dot).
    """
    rows = np.asarray(grads.rows, dtype=np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    unit = rows / safe[:, None]
    return CheckpointGradients(
        checkpoint_index=grads.checkpoint_index,
        rows=unit,
        doc_ids=grads.doc_ids,
        zero_rows=int(zero.sum()),
    )


def _chunked_mean(rows: np.ndarray, chunk_rows: int) -> np.ndarray:
    # Fixed chunk-ordered accumulation: bit-identical across reruns.
    n = rows.shape[0]
    total = np.zeros(rows.shape[1], dtype=np.float64)
    for start in range(0, n, chunk_rows):
        total += rows[start : start + chunk_rows].sum(axis=0, dtype=np.float64)
    return total / n


def influence_column(
    grads: CheckpointGradients, include_self: bool = True, chunk_rows: int = CHUNK_ROWS
) -> np.ndarray:
    """Mean-gradient fast path for one checkpoint's scores.

    Pre: rows already normalized (see normalize_rows). With include_self=False
    the self term (the row's squared norm: 1, or 0 for a zero row) is removed
    algebraically, giving the mean over the other documents.
    """
    rows = grads.rows
    n = grads.n_documents
    if not include_self and n == 1:
        raise InfluenceError("self-exclusion undefined for a single-document set")
    mean = _chunked_mean(rows, chunk_rows)
    dots = np.empty(n, dtype=np.float64)
    for start in range(0, n, chunk_rows):
        stop = min(start + chunk_rows, n)
        dots[start:stop] = rows[start:stop] @ mean
    if include_self:
        return dots
    self_dots = np.einsum("ij,ij->i", rows, rows)
    return (n * dots - self_dots) / (n - 1)


def pairwise_oracle(grads: CheckpointGradients, include_self: bool = True) -> np.ndarray:
    """Literal mean of pairwise dot products; O(n^2 d) and intentionally naive.

    Exists only to verify influence_column; do not substitute one for the other.
    """
    rows = grads.rows
    n = grads.n_documents
    if not include_self and n == 1:
        raise InfluenceError("self-exclusion undefined for a single-document set")
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if not include_self and j == i:
                continue
            acc += float(np.dot(rows[i], rows[j]))
        out[i] = acc / (n if include_self else n - 1)
    return out


def influence_matrix(cset: CheckpointSet, include_self: bool = True) -> InfluenceMatrix:
    """Normalize each checkpoint and stack its score column, scaled by eta."""
    cols = []
    for grads, weight in zip(cset.checkpoints, cset.eta):
        unit = normalize_rows(grads)
        cols.append(influence_column(unit, include_self=include_self) * weight)
    return InfluenceMatrix(
        values=np.column_stack(cols),
        doc_ids=cset.doc_ids,
        checkpoint_indices=cset.checkpoint_indices,
        include_self=include_self,
    )


def aggregate(phi: InfluenceMatrix) -> AggregateInfluence:
    return AggregateInfluence(values=phi.values.sum(axis=1), doc_ids=phi.doc_ids)


def make_lognorm_filter(length: int, mu: float = 0.0, sigma: float = 1.0) -> LognormFilter:
    """Taps proportional to the lognormal density at 1..length, normalized.

    The density is evaluated at k+1 (it is undefined at 0), so tap 0 weights
    the current checkpoint.
    """
    if length < 1:
        raise InfluenceError(f"filter length must be >= 1, got {length}")
    if sigma <= 0:
        raise InfluenceError(f"sigma must be positive, got {sigma}")
    k = np.arange(1, length + 1, dtype=np.float64)
    dens = np.exp(-((np.log(k) - mu) ** 2) / (2.0 * sigma**2)) / (k * sigma * math.sqrt(2.0 * math.pi))
    return LognormFilter(taps=dens / dens.sum(), mu=float(mu), sigma=float(sigma))


def convolve(phi: InfluenceMatrix, filt: LognormFilter) -> InfluenceMatrix:
    """Causal convolution along the checkpoint axis; out-of-range terms are zero."""
    T = phi.n_checkpoints
    taps = filt.taps
    if len(taps) > T:
        raise InfluenceError(f"filter length {len(taps)} exceeds checkpoint axis {T}")
    out = np.zeros_like(phi.values)
    for t in range(T):
        for k in range(min(len(taps), t + 1)):
            out[:, t] += phi.values[:, t - k] * taps[k]
    return InfluenceMatrix(
        values=out,
        doc_ids=phi.doc_ids,
        checkpoint_indices=phi.checkpoint_indices,
        include_self=phi.include_self,
    )


def save_influence(phi: InfluenceMatrix, path: str | Path) -> None:
    path = Path(path)
    n, t = phi.values.shape
    flags = 1 if phi.include_self else 0
    with path.open("wb") as fh:
        fh.write(_IMTX_HEADER.pack(IMTX_MAGIC, IMTX_VERSION, n, t, flags))
        fh.write(np.asarray(phi.doc_ids, dtype="<u8").tobytes())
        fh.write(np.asarray(phi.checkpoint_indices, dtype="<u4").tobytes())
        fh.write(np.ascontiguousarray(phi.values, dtype="<f8").tobytes())


def load_influence(path: str | Path) -> InfluenceMatrix:
    path = Path(path)
    if not path.exists():
        raise InfluenceError(f"influence file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _IMTX_HEADER.size:
        raise InfluenceError(f"{path}: truncated header")
    magic, version, n, t, flags = _IMTX_HEADER.unpack_from(raw)
    if magic != IMTX_MAGIC:
        raise InfluenceError(f"{path}: bad magic {magic!r}")
    if version != IMTX_VERSION:
        raise InfluenceError(f"{path}: version mismatch (file {version}, reader {IMTX_VERSION})")
    offset = _IMTX_HEADER.size
    expected = offset + 8 * n + 4 * t + 8 * n * t
    if len(raw) != expected:
        raise InfluenceError(f"{path}: size {len(raw)} != expected {expected}")
    doc_ids = np.frombuffer(raw, dtype="<u8", count=n, offset=offset)
    offset += 8 * n
    ckpts = np.frombuffer(raw, dtype="<u4", count=t, offset=offset)
    offset += 4 * t
    values = np.frombuffer(raw, dtype="<f8", count=n * t, offset=offset).reshape(n, t)
    return InfluenceMatrix(
        values=values.copy(),
        doc_ids=tuple(int(x) for x in doc_ids),
        checkpoint_indices=tuple(int(x) for x in ckpts),
        include_self=bool(flags & 1),
    )


def export_influence_text(phi: InfluenceMatrix, path: str | Path) -> None:
    """Human-auditable table: doc_id, per-checkpoint scores, aggregate."""
    path = Path(path)
    agg = aggregate(phi)
    with path.open("w", encoding="utf-8") as fh:
        heads = "\t".join(f"ckpt_{c}" for c in phi.checkpoint_indices)
        fh.write(f"doc_id\t{heads}\taggregate\n")
        for i, doc_id in enumerate(phi.doc_ids):
            cells = "\t".join(repr(float(v)) for v in phi.values[i])
            fh.write(f"{doc_id}\t{cells}\t{float(agg.values[i])!r}\n")
