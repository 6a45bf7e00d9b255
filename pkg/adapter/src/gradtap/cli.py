"""Command-line wrapper: `gradtap toy-train` and `gradtap extract`."""

from __future__ import annotations

import argparse
import sys

from .corpusio import CorpusFormatError
from .dumps import DumpWriteError
from .extract import ExtractionConfig, ExtractionError, extract_checkpoint
from .trainer import ToyTrainConfig, TrainingError, toy_train


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="gradtap",
        description="Train a toy model and export per-document embedding-gradient dumps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toy-train", help="train the toy model, one checkpoint per epoch")
    p.add_argument("--corpus", required=True, help="corpus manifest (corpus-manifest-v1)")
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="checkpoint + loss.log directory")
    p.add_argument("--embed-dim", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--mask-fraction", type=float, default=0.15)

    p = sub.add_parser("extract", help="dump per-document embedding gradients for one checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output dump file (.gdmp)")
    p.add_argument("--feature-dim", type=int, help="project rows down to this many features")
    p.add_argument("--projection-seed", type=int, default=0)
    p.add_argument("--mask-epoch", type=int, help="override the checkpoint's masking epoch")

    args = parser.parse_args(argv)
    try:
        if args.command == "toy-train":
            config = ToyTrainConfig(
                epochs=args.epochs,
                seed=args.seed,
                embed_dim=args.embed_dim,
                lr=args.lr,
                mask_fraction=args.mask_fraction,
            )
            paths = toy_train(args.corpus, args.out, config)
            print(f"trained {len(paths)} epochs; checkpoints and loss.log in {args.out}")
        else:
            config = ExtractionConfig(
                feature_dim=args.feature_dim,
                projection_seed=args.projection_seed,
                mask_epoch=args.mask_epoch,
            )
            out = extract_checkpoint(args.checkpoint, args.corpus, args.out, config)
            print(f"wrote {out}")
        return 0
    except (CorpusFormatError, DumpWriteError, ExtractionError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
