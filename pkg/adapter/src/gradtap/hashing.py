"""Reproducible masking seeds.

Dynamic masking re-masks every document differently per epoch; deriving the
mask RNG seed from a content hash of (document id, epoch) makes the masking a
pure function of those two values, identical across processes and platforms.
Python's builtin ``hash()`` is salted per process and must never be used here.
"""

from __future__ import annotations

import hashlib


def deterministic_mask_seed(doc_id: int, epoch: int) -> int:
    """Stable 64-bit seed for (document, epoch); same inputs, same seed, anywhere."""
    digest = hashlib.sha256(f"mask:{int(doc_id)}:{int(epoch)}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "little")
