#!/usr/bin/env python3
"""End-to-end demo on synthetic inputs: dumps -> influence -> curricula -> analysis.

Writes everything under --workdir: a synthetic corpus, T synthetic gradient
dumps, the influence matrices, all 14 curriculum manifests, an analysis report,
and charts. Rerunning with the same seed reproduces every file byte for byte.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))
from make_synthetic_corpus import synth_corpus

from currkit.cli import main as currkit
from currkit.corpus import save_corpus
from currkit.gradstore import CheckpointGradients, write_dump
from currkit.seeding import derive_rng


def synth_dumps(corpus, out_dir: Path, T: int, dim: int, seed: int) -> None:
    """Per-checkpoint gradient rows that drift smoothly so columns differ."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = derive_rng(seed, "demo-dumps")
    base = rng.normal(size=(len(corpus), dim))
    for t in range(1, T + 1):
        drift = rng.normal(scale=0.3, size=(len(corpus), dim))
        rows = base + t * drift * 0.2
        grads = CheckpointGradients(checkpoint_index=t, rows=rows, doc_ids=corpus.doc_ids)
        write_dump(grads, out_dir / f"ckpt_{t:02d}.gdmp")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", type=Path, required=True)
    ap.add_argument("--n-docs", type=int, default=300)
    ap.add_argument("--checkpoints", type=int, default=10)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    wd = args.workdir
    wd.mkdir(parents=True, exist_ok=True)
    corpus = synth_corpus(args.n_docs, args.seed, "demo", 5, 80)
    corpus_path = wd / "corpus.jsonl"
    save_corpus(corpus, corpus_path)
    synth_dumps(corpus, wd / "dumps", args.checkpoints, args.dim, args.seed)
    print(f"corpus: {len(corpus)} docs, {corpus.total_words} words; {args.checkpoints} dumps")

    def step(*cmd):
        code = currkit([str(c) for c in cmd])
        if code != 0:
            sys.exit(code)

    step("influence", "--dumps", wd / "dumps", "--out", wd / "influence", "--filter", "lognorm")
    step("scores", "--corpus", corpus_path, "--out", wd / "influence")
    step(
        "build", "--corpus", corpus_path, "--all", "--seed", args.seed,
        "--epochs", args.epochs, "--block-size", 50,
        "--phi", wd / "influence" / "influence.imx",
        "--phi-conv", wd / "influence" / "influence_conv.imx",
        "--scores", wd / "influence" / "scores.tsv",
        "--out", wd / "manifests", "--text",
    )
    step(
        "analyze", "--corpus", corpus_path,
        "--manifest", wd / "manifests" / "random.cman",
        "--manifest", wd / "manifests" / "sorted_desc.cman",
        "--manifest", wd / "manifests" / "mattr.cman",
        "--out", wd / "analysis",
    )
    step(
        "plot", "--corpus", corpus_path,
        "--manifest", wd / "manifests" / "random.cman",
        "--manifest", wd / "manifests" / "sorted_desc.cman",
        "--out", wd / "plots",
    )
    print(f"demo complete under {wd}")


if __name__ == "__main__":
    main()
