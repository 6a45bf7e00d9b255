"""Binary per-checkpoint gradient dumps.

One file per checkpoint: a 20-byte little-endian header followed by the
row-major float32 gradient matrix, one row per document in corpus manifest
order. A plain-text sidecar ``<file>.rows`` pins row position -> doc_id so
dumps can never silently misalign with a corpus.

Header layout (little-endian):

    bytes 0..3    magic  b"GDMP"
    bytes 4..7    format version  (uint32, currently 1)
    bytes 8..11   checkpoint index  (uint32)
    bytes 12..15  n_documents  (uint32, >= 1)
    bytes 16..19  feature_dim  (uint32, >= 1)

Sidecar: one "row_position doc_id" pair per line, rows 0..n-1 in order.

Payload floats are 32-bit to halve storage; everything read back is upcast to
float64 and all downstream accumulation stays 64-bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"GDMP"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIII")
DUMP_SUFFIX = ".gdmp"


class GradStoreError(ValueError):
    """Malformed dump file or gradient-set invariant violation."""


@dataclass(frozen=True)
class DumpHeader:
    format_version: int
    checkpoint_index: int
    n_documents: int
    feature_dim: int


@dataclass
class CheckpointGradients:
    """Per-document gradient rows for one checkpoint.

    Row i is the gradient vector of the document at manifest position i;
    doc_ids[i] names it. rows are float64 in memory regardless of the on-disk
    dtype. zero_rows is filled in by influence.normalize_rows.
    """

    checkpoint_index: int
    rows: np.ndarray
    doc_ids: tuple[int, ...]
    zero_rows: int | None = None

    def __post_init__(self) -> None:
        self.rows = np.ascontiguousarray(self.rows)
        if self.rows.ndim != 2:
            raise GradStoreError(f"rows must be 2-D, got shape {self.rows.shape}")
        n, d = self.rows.shape
        if n < 1 or d < 1:
            raise GradStoreError(f"need n_documents >= 1 and feature_dim >= 1, got {n}x{d}")
        if len(self.doc_ids) != n:
            raise GradStoreError(f"{len(self.doc_ids)} doc_ids for {n} rows")
        if self.checkpoint_index < 0:
            raise GradStoreError("checkpoint_index must be non-negative")

    @property
    def n_documents(self) -> int:
        return self.rows.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.rows.shape[1]

    @property
    def header(self) -> DumpHeader:
        return DumpHeader(FORMAT_VERSION, self.checkpoint_index, self.n_documents, self.feature_dim)

    @property
    def row_index(self) -> dict[int, int]:
        return {doc_id: i for i, doc_id in enumerate(self.doc_ids)}


@dataclass
class CheckpointSet:
    """All checkpoints of one run, strictly ordered by checkpoint index.

    eta holds the optional per-checkpoint weight applied when assembling the
    influence matrix; it defaults to all ones and no built-in path sets it.
    """

    checkpoints: tuple[CheckpointGradients, ...]
    eta: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.checkpoints:
            raise GradStoreError("checkpoint set is empty")
        first = self.checkpoints[0]
        prev_index = -1
        for ck in self.checkpoints:
            if ck.checkpoint_index <= prev_index:
                raise GradStoreError(
                    f"checkpoint indices not strictly increasing at index {ck.checkpoint_index}"
                )
            prev_index = ck.checkpoint_index
            if ck.n_documents != first.n_documents or ck.feature_dim != first.feature_dim:
                raise GradStoreError(
                    f"checkpoint {ck.checkpoint_index}: shape {ck.n_documents}x{ck.feature_dim} "
                    f"differs from {first.n_documents}x{first.feature_dim}"
                )
            if ck.doc_ids != first.doc_ids:
                raise GradStoreError(
                    f"checkpoint {ck.checkpoint_index}: row map differs from first checkpoint"
                )
        if len(self.eta) != len(self.checkpoints):
            raise GradStoreError(f"{len(self.eta)} eta weights for {len(self.checkpoints)} checkpoints")
        if any(w < 0 for w in self.eta):
            raise GradStoreError("eta weights must be non-negative")

    @property
    def T(self) -> int:
        return len(self.checkpoints)

    @property
    def n_documents(self) -> int:
        return self.checkpoints[0].n_documents

    @property
    def feature_dim(self) -> int:
        return self.checkpoints[0].feature_dim

    @property
    def doc_ids(self) -> tuple[int, ...]:
        return self.checkpoints[0].doc_ids

    @property
    def checkpoint_indices(self) -> tuple[int, ...]:
        return tuple(ck.checkpoint_index for ck in self.checkpoints)


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".rows")


def write_dump(grads: CheckpointGradients, path: str | Path) -> None:
    """Write header + float32 payload + sidecar row map, bit-exact."""
    path = Path(path)
    if not np.all(np.isfinite(grads.rows)):
        bad = int(np.flatnonzero(~np.isfinite(grads.rows).all(axis=1))[0])
        raise GradStoreError(f"row {bad} is non-finite; refusing to write")
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, grads.checkpoint_index, grads.n_documents, grads.feature_dim
    )
    payload = np.ascontiguousarray(grads.rows, dtype="<f4")
    with path.open("wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())
    with sidecar_path(path).open("w", encoding="utf-8") as fh:
        for i, doc_id in enumerate(grads.doc_ids):
            fh.write(f"{i} {doc_id}\n")


def read_header(path: str | Path) -> DumpHeader:
    path = Path(path)
    if not path.exists():
        raise GradStoreError(f"dump not found: {path}")
    with path.open("rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise GradStoreError(f"{path}: truncated header")
    magic, version, ckpt, n, d = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise GradStoreError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise GradStoreError(f"{path}: version mismatch (file {version}, reader {FORMAT_VERSION})")
    if n < 1 or d < 1:
        raise GradStoreError(f"{path}: header declares degenerate shape {n}x{d}")
    return DumpHeader(version, ckpt, n, d)


def _read_sidecar(path: Path, n: int) -> tuple[int, ...]:
    sc = sidecar_path(path)
    if not sc.exists():
        raise GradStoreError(f"{path}: missing sidecar row map {sc.name}")
    ids: dict[int, int] = {}
    for lineno, line in enumerate(sc.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GradStoreError(f"{sc}: line {lineno}: expected 'row doc_id'")
        row, doc_id = int(parts[0]), int(parts[1])
        if row in ids:
            raise GradStoreError(f"{sc}: line {lineno}: duplicate row {row}")
        ids[row] = doc_id
    if sorted(ids) != list(range(n)):
        raise GradStoreError(f"{sc}: row map does not cover rows 0..{n - 1} exactly")
    return tuple(ids[i] for i in range(n))


def read_dump(path: str | Path, validate: bool = True) -> CheckpointGradients:
    """Parse and validate one dump; rows come back as float64."""
    path = Path(path)
    header = read_header(path)
    n, d = header.n_documents, header.feature_dim
    expected = _HEADER.size + 4 * n * d
    actual = path.stat().st_size
    if actual < expected:
        raise GradStoreError(f"{path}: truncated payload ({actual} bytes, expected {expected})")
    if actual > expected:
        raise GradStoreError(f"{path}: {actual - expected} trailing bytes after payload")
    with path.open("rb") as fh:
        fh.seek(_HEADER.size)
        payload = np.fromfile(fh, dtype="<f4", count=n * d)
    rows = payload.reshape(n, d).astype(np.float64)
    if validate:
        finite = np.isfinite(rows).all(axis=1)
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            raise GradStoreError(f"{path}: non-finite value in row {bad}")
    doc_ids = _read_sidecar(path, n)
    return CheckpointGradients(
        checkpoint_index=header.checkpoint_index, rows=rows, doc_ids=doc_ids
    )


def iter_dump_rows(path: str | Path, chunk_rows: int = 1024):
    """Yield (start_row, float64 chunk) sequentially without loading the file.

    The streaming path for large dumps; validation of finiteness is per chunk.
    """
    path = Path(path)
    header = read_header(path)
    n, d = header.n_documents, header.feature_dim
    expected = _HEADER.size + 4 * n * d
    if path.stat().st_size < expected:
        raise GradStoreError(f"{path}: truncated payload")
    with path.open("rb") as fh:
        fh.seek(_HEADER.size)
        start = 0
        while start < n:
            count = min(chunk_rows, n - start)
            chunk = np.fromfile(fh, dtype="<f4", count=count * d)
            if chunk.size != count * d:
                raise GradStoreError(f"{path}: truncated payload at row {start}")
            rows = chunk.reshape(count, d).astype(np.float64)
            finite = np.isfinite(rows).all(axis=1)
            if not finite.all():
                bad = start + int(np.flatnonzero(~finite)[0])
                raise GradStoreError(f"{path}: non-finite value in row {bad}")
            yield start, rows
            start += count


def read_checkpoint_set(
    directory: str | Path, eta: tuple[float, ...] | list[float] | None = None
) -> CheckpointSet:
    """Read every *.gdmp in a directory as one strictly-ordered checkpoint set."""
    directory = Path(directory)
    files = sorted(directory.glob(f"*{DUMP_SUFFIX}"))
    if not files:
        raise GradStoreError(f"no {DUMP_SUFFIX} files in {directory}")
    dumps = [read_dump(p) for p in files]
    dumps.sort(key=lambda g: g.checkpoint_index)
    weights = tuple(float(w) for w in eta) if eta is not None else (1.0,) * len(dumps)
    return CheckpointSet(checkpoints=tuple(dumps), eta=weights)
