"""Stage-labeled document collections and their word-level bookkeeping.

A corpus is an ordered list of documents, each tagged with a source name and a
difficulty stage (C1..C5). The document order in the manifest is the canonical
identity order that gradient dumps and curriculum manifests align to; doc_ids
are the stable cross-file references. Tokenization is whitespace splitting of
the raw text, no lowercasing, no punctuation stripping, so word counts agree
everywhere (budgets, manifests, dumps).

Corpus manifest format (UTF-8, one JSON object per line):

    line 1    header  {"format": "corpus-manifest-v1", "name": str,
                       "documents": int, "words": int}
    line 2..  record  {"doc_id": int, "source": str, "stage": "C1".."C5",
                       "text": str}
              or      {"doc_id": ..., "source": ..., "stage": ...,
                       "text_file": str, "byte_start": int, "byte_end": int}

``text_file`` paths are resolved relative to the manifest's directory and the
byte range is decoded as UTF-8. Both record forms produce identical Corpus
values; the serializer always writes inline text.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from .seeding import derive_rng

STAGES = ("C1", "C2", "C3", "C4", "C5")
MANIFEST_FORMAT = "corpus-manifest-v1"


class CorpusError(ValueError):
    """Malformed corpus manifest or corpus invariant violation."""


def tokenize(text: str) -> tuple[str, ...]:
    """Whitespace tokenization; the single word-counting rule used package-wide."""
    return tuple(text.split())


@dataclass(frozen=True)
class Document:
    doc_id: int
    source: str
    stage: str
    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.doc_id < 0:
            raise CorpusError(f"doc_id must be non-negative, got {self.doc_id}")
        if self.stage not in STAGES:
            raise CorpusError(f"unknown stage label {self.stage!r}")
        if not self.tokens:
            raise CorpusError(f"empty document (doc_id {self.doc_id})")

    @property
    def word_count(self) -> int:
        return len(self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class Corpus:
    name: str
    documents: tuple[Document, ...]

    def __post_init__(self) -> None:
        if not self.documents:
            raise CorpusError("empty corpus")
        seen: set[int] = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise CorpusError(f"duplicate doc_id {doc.doc_id}")
            seen.add(doc.doc_id)

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def total_words(self) -> int:
        return sum(d.word_count for d in self.documents)

    @property
    def max_doc_words(self) -> int:
        return max(d.word_count for d in self.documents)

    @cached_property
    def by_id(self) -> dict[int, Document]:
        return {d.doc_id: d for d in self.documents}

    @property
    def doc_ids(self) -> tuple[int, ...]:
        return tuple(d.doc_id for d in self.documents)

    def stage_words(self) -> dict[str, int]:
        """Word totals per stage, only for stages present."""
        totals: dict[str, int] = {}
        for d in self.documents:
            totals[d.stage] = totals.get(d.stage, 0) + d.word_count
        return totals


def _parse_record(rec: dict, lineno: int, base_dir: Path) -> Document:
    for field in ("doc_id", "source", "stage"):
        if field not in rec:
            raise CorpusError(f"line {lineno}: missing field {field!r}")
    doc_id, source, stage = rec["doc_id"], rec["source"], rec["stage"]
    if not isinstance(doc_id, int) or doc_id < 0:
        raise CorpusError(f"line {lineno}: doc_id must be a non-negative integer")
    if stage not in STAGES:
        raise CorpusError(f"line {lineno}: unknown stage label {stage!r}")
    if "text" in rec:
        text = rec["text"]
    elif "text_file" in rec:
        if "byte_start" not in rec or "byte_end" not in rec:
            raise CorpusError(f"line {lineno}: text_file record needs byte_start/byte_end")
        ref = base_dir / rec["text_file"]
        if not ref.exists():
            raise CorpusError(f"line {lineno}: text_file not found: {ref}")
        raw = ref.read_bytes()[rec["byte_start"] : rec["byte_end"]]
        text = raw.decode("utf-8")
    else:
        raise CorpusError(f"line {lineno}: record has neither text nor text_file")
    tokens = tokenize(text)
    if not tokens:
        raise CorpusError(f"line {lineno}: empty document (doc_id {doc_id})")
    return Document(doc_id=doc_id, source=source, stage=stage, tokens=tokens)


def load_corpus(path: str | Path) -> Corpus:
    """Parse a corpus manifest; errors carry the offending line number."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"manifest not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not any(ln.strip() for ln in lines):
        raise CorpusError("empty corpus")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorpusError(f"line 1: malformed header: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != MANIFEST_FORMAT:
        raise CorpusError(f"line 1: not a {MANIFEST_FORMAT} header")
    name = header.get("name", path.stem)

    docs: list[Document] = []
    seen: set[int] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed record: {exc}") from exc
        doc = _parse_record(rec, lineno, path.parent)
        if doc.doc_id in seen:
            raise CorpusError(f"line {lineno}: duplicate doc_id {doc.doc_id}")
        seen.add(doc.doc_id)
        docs.append(doc)
    if not docs:
        raise CorpusError("empty corpus")

    corpus = Corpus(name=name, documents=tuple(docs))
    if "documents" in header and header["documents"] != len(docs):
        raise CorpusError(
            f"line 1: header declares {header['documents']} documents, manifest has {len(docs)}"
        )
    if "words" in header and header["words"] != corpus.total_words:
        raise CorpusError(
            f"line 1: header declares {header['words']} words, manifest has {corpus.total_words}"
        )
    return corpus


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the manifest with inline text; load(save(c)) == c."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {
            "format": MANIFEST_FORMAT,
            "name": corpus.name,
            "documents": len(corpus),
            "words": corpus.total_words,
        }
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for d in corpus.documents:
            rec = {"doc_id": d.doc_id, "source": d.source, "stage": d.stage, "text": d.text}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def corpus_hash(corpus: Corpus) -> str:
    """Short content hash binding manifests to the corpus they were built from."""
    h = hashlib.sha256()
    h.update(corpus.name.encode("utf-8"))
    for d in corpus.documents:
        h.update(f"\x1f{d.doc_id}\x1f{d.source}\x1f{d.stage}\x1f{d.text}".encode("utf-8"))
    return h.hexdigest()[:16]


def synth_equitoken(corpus: Corpus, target_len: int) -> Corpus:
    """Re-cut the corpus into synthetic documents of exactly target_len words.

    Per (source, stage) group, in first-appearance order: concatenate the
    group's token stream in document order and slice it into consecutive
    documents of target_len words. The remainder shorter than target_len is
    dropped, never padded. New doc_ids are assigned sequentially from 0.
    """
    if target_len < 1:
        raise CorpusError(f"target_len must be >= 1, got {target_len}")
    groups: dict[tuple[str, str], list[str]] = {}
    for d in corpus.documents:
        groups.setdefault((d.source, d.stage), []).extend(d.tokens)
    docs: list[Document] = []
    next_id = 0
    for (source, stage), stream in groups.items():
        for start in range(0, len(stream) - target_len + 1, target_len):
            docs.append(
                Document(
                    doc_id=next_id,
                    source=source,
                    stage=stage,
                    tokens=tuple(stream[start : start + target_len]),
                )
            )
            next_id += 1
    if not docs:
        raise CorpusError(f"no group has {target_len} words; nothing to synthesize")
    return Corpus(name=f"{corpus.name}-equitoken{target_len}", documents=tuple(docs))


def stratify(corpus: Corpus, words_per_stage: int, seed: int) -> Corpus:
    """Subsample to roughly equal word totals per stage.

    Per stage present in the corpus, documents are visited in seeded-shuffled
    order and taken greedily until the next one would overflow words_per_stage,
    so each stage lands within one maximum-document-length below the budget.
    Deterministic given the seed; output order is stage-major (C1..C5), then
    selection order.
    """
    if words_per_stage < 1:
        raise CorpusError(f"words_per_stage must be >= 1, got {words_per_stage}")
    available = corpus.stage_words()
    for stage, have in available.items():
        if have < words_per_stage:
            raise CorpusError(
                f"stage {stage}: insufficient words ({have} available, "
                f"{words_per_stage} requested, short {words_per_stage - have})"
            )
    docs: list[Document] = []
    for stage in STAGES:
        if stage not in available:
            continue
        stage_docs = [d for d in corpus.documents if d.stage == stage]
        rng = derive_rng(seed, "stratify", stage)
        taken_words = 0
        for idx in rng.permutation(len(stage_docs)):
            doc = stage_docs[int(idx)]
            if taken_words + doc.word_count > words_per_stage:
                break
            docs.append(doc)
            taken_words += doc.word_count
    return Corpus(name=f"{corpus.name}-stratified{words_per_stage}", documents=tuple(docs))
