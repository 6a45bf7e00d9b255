"""Curriculum compilation and analysis from training-gradient influence scores."""

from .corpus import Corpus, Document, load_corpus, save_corpus, stratify, synth_equitoken
from .curricula import (
    STRATEGIES,
    CurriculumManifest,
    StrategySpec,
    build_strategy,
    load_manifest,
    save_manifest,
    validate_manifest,
)
from .gradstore import CheckpointGradients, CheckpointSet, read_dump, write_dump
from .influence import (
    InfluenceMatrix,
    aggregate,
    convolve,
    influence_matrix,
    make_lognorm_filter,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Document",
    "load_corpus",
    "save_corpus",
    "stratify",
    "synth_equitoken",
    "STRATEGIES",
    "CurriculumManifest",
    "StrategySpec",
    "build_strategy",
    "load_manifest",
    "save_manifest",
    "validate_manifest",
    "CheckpointGradients",
    "CheckpointSet",
    "read_dump",
    "write_dump",
    "InfluenceMatrix",
    "aggregate",
    "convolve",
    "influence_matrix",
    "make_lognorm_filter",
    "__version__",
]
