"""Writer for the binary gradient-dump format the curriculum toolkit reads.

Little-endian, one file per checkpoint: 20-byte header ("GDMP", format
version 1, checkpoint index, n_documents, feature_dim as uint32) followed by
the row-major float32 gradient matrix, plus a `<file>.rows` sidecar with one
"row_position doc_id" line per row. This is the producer side of a documented
wire format; the toolkit owns the consumer side.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"GDMP"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIII")


class DumpWriteError(ValueError):
    pass


def write_gradient_dump(
    rows: np.ndarray, doc_ids: Sequence[int], checkpoint_index: int, path: str | Path
) -> None:
    path = Path(path)
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
        raise DumpWriteError(f"rows must be a non-empty 2-D matrix, got shape {rows.shape}")
    n, d = rows.shape
    if len(doc_ids) != n:
        raise DumpWriteError(f"{len(doc_ids)} doc_ids for {n} rows")
    if not np.all(np.isfinite(rows)):
        bad = int(np.flatnonzero(~np.isfinite(rows).all(axis=1))[0])
        raise DumpWriteError(f"row {bad} is non-finite; refusing to write")
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, checkpoint_index, n, d))
        fh.write(rows.tobytes())
    with Path(str(path) + ".rows").open("w", encoding="utf-8") as fh:
        for i, doc_id in enumerate(doc_ids):
            fh.write(f"{i} {doc_id}\n")


def read_dump_dims(path: str | Path) -> tuple[int, int]:
    """(n_documents, feature_dim) from an existing dump's header."""
    raw = Path(path).open("rb").read(_HEADER.size)
    magic, version, _, n, d = _HEADER.unpack(raw)
    if magic != MAGIC or version != FORMAT_VERSION:
        raise DumpWriteError(f"{path}: not a version-{FORMAT_VERSION} gradient dump")
    return n, d
