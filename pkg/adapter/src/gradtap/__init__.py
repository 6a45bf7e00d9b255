"""Training-loop adapter: toy trainer plus per-document gradient extraction."""

from .extract import ExtractionConfig, extract_checkpoint
from .hashing import deterministic_mask_seed
from .trainer import ToyTrainConfig, toy_train

__version__ = "0.1.0"

__all__ = [
    "ExtractionConfig",
    "extract_checkpoint",
    "deterministic_mask_seed",
    "ToyTrainConfig",
    "toy_train",
    "__version__",
]
