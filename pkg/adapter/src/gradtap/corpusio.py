"""Reader for the corpus manifest format consumed by the curriculum toolkit.

One JSON object per line: a `corpus-manifest-v1` header, then one record per
document with doc_id/source/stage and either inline `text` or a
`text_file` + byte range reference. This module only needs document identity
and whitespace tokens; it deliberately implements the documented file format
rather than importing the toolkit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class CorpusFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusDoc:
    doc_id: int
    tokens: tuple[str, ...]


def read_corpus_docs(path: str | Path) -> list[CorpusDoc]:
    """Documents in manifest order; tokenization is whitespace splitting."""
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"corpus manifest not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CorpusFormatError(f"{path}: empty manifest")
    header = json.loads(lines[0])
    if header.get("format") != "corpus-manifest-v1":
        raise CorpusFormatError(f"{path}: line 1 is not a corpus-manifest-v1 header")
    docs: list[CorpusDoc] = []
    seen: set[int] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        rec = json.loads(line)
        doc_id = rec["doc_id"]
        if doc_id in seen:
            raise CorpusFormatError(f"{path}: line {lineno}: duplicate doc_id {doc_id}")
        seen.add(doc_id)
        if "text" in rec:
            text = rec["text"]
        else:
            blob = (path.parent / rec["text_file"]).read_bytes()
            text = blob[rec["byte_start"] : rec["byte_end"]].decode("utf-8")
        tokens = tuple(text.split())
        if not tokens:
            raise CorpusFormatError(f"{path}: line {lineno}: empty document {doc_id}")
        docs.append(CorpusDoc(doc_id=doc_id, tokens=tokens))
    if not docs:
        raise CorpusFormatError(f"{path}: no documents")
    return docs
