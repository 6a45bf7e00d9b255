#!/usr/bin/env python3
"""Generate a stage-labeled synthetic corpus manifest for pipeline experiments.

Documents get varied lengths and a per-stage vocabulary slice so heuristic
scores and stage compositions are non-trivial. Deterministic per seed.
"""

import argparse
from pathlib import Path

from currkit.corpus import STAGES, Corpus, Document, save_corpus
from currkit.seeding import derive_rng


def synth_corpus(n_docs: int, seed: int, name: str, min_words: int, max_words: int) -> Corpus:
    rng = derive_rng(seed, "make-synthetic-corpus")
    docs = []
    for i in range(n_docs):
        stage = STAGES[i % len(STAGES)]
        stage_idx = STAGES.index(stage)
        n = int(rng.integers(min_words, max_words + 1))
        # later stages draw from a wider vocabulary: rising lexical diversity
        vocab = 40 + 60 * stage_idx
        tokens = tuple(f"w{int(t)}" for t in rng.integers(0, vocab, n))
        docs.append(Document(doc_id=i, source=f"src_{stage}", stage=stage, tokens=tokens))
    return Corpus(name=name, documents=tuple(docs))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-docs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--name", default="synthetic")
    ap.add_argument("--min-words", type=int, default=5)
    ap.add_argument("--max-words", type=int, default=80)
    ap.add_argument("--out", type=Path, required=True)
    args = ap.parse_args()
    corp = synth_corpus(args.n_docs, args.seed, args.name, args.min_words, args.max_words)
    save_corpus(corp, args.out)
    print(f"wrote {args.out}: {len(corp)} documents, {corp.total_words} words")


if __name__ == "__main__":
    main()
