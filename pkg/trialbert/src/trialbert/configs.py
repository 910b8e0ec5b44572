"""Training configuration dataclasses with JSON round-tripping.

Both configs validate their invariants on construction so a bad JSON file
fails at load time, not mid-training.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

MAX_SEQ_LEN_CAP = 512


@dataclass(frozen=True)
class FinetuneConfig:
    """Hyperparameters for fine-tuning a sequence classifier."""

    base_model: str
    max_seq_len: int = 512
    epochs: int = 3
    learning_rate: float = 2e-05
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if not self.base_model:
            raise ValueError("base_model must be a model name or directory")
        if not 0 < self.max_seq_len <= MAX_SEQ_LEN_CAP:
            raise ValueError(f"max_seq_len must be in 1..{MAX_SEQ_LEN_CAP}")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass(frozen=True)
class PretrainConfig:
    """Hyperparameters for masked-language-model continued pre-training."""

    corpus_path: str
    base_model: str
    batch_size: int = 64
    max_seq_len: int = 512
    learning_rate: float = 2e-05
    steps: int = 10000
    mask_probability: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if not self.corpus_path:
            raise ValueError("corpus_path is required")
        if not self.base_model:
            raise ValueError("base_model must be a model name or directory")
        if not 0 < self.max_seq_len <= MAX_SEQ_LEN_CAP:
            raise ValueError(f"max_seq_len must be in 1..{MAX_SEQ_LEN_CAP}")
        if not 0 < self.mask_probability < 1:
            raise ValueError("mask_probability must be strictly between 0 and 1")
        if self.steps < 1:
            raise ValueError("steps must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def load_config(path: str | Path, cls):
    """Load a FinetuneConfig or PretrainConfig from a JSON file."""
    with open(path) as fh:
        return cls(**json.load(fh))


def save_config(config, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(dataclasses.asdict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")
