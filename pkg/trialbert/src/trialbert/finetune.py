"""Fine-tune a base encoder as a binary sequence classifier.

Training data is a JSON-lines file with one object per line carrying at
least "text" and "label" (0/1); extra keys are ignored. The run is
deterministic on CPU for a fixed config, and a per-epoch loss log is
written next to the saved model.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from . import _quiet  # noqa: F401
from .configs import FinetuneConfig
from .errors import BaseModelUnavailable, SingleClassData

TRAINING_LOG = "training_log.json"


def read_examples(train_file: str | Path) -> list[tuple[str, int]]:
    examples = []
    with open(train_file) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                examples.append((obj["text"], int(obj["label"])))
            except KeyError as exc:
                raise ValueError(
                    f"{train_file}:{line_no}: missing {exc} field"
                ) from exc
    return examples


def seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)


def load_base(base_model: str, **kwargs):
    """Load tokenizer + model, mapping any load failure to one error type."""
    try:
        tokenizer = AutoTokenizer.from_pretrained(base_model)
        model = AutoModelForSequenceClassification.from_pretrained(
            base_model, **kwargs
        )
    except (OSError, ValueError) as exc:
        raise BaseModelUnavailable(f"cannot load base model {base_model!r}: {exc}")
    return tokenizer, model


def finetune(train_file: str | Path, config: FinetuneConfig, out_dir: str | Path) -> str:
    """Train a binary classifier and save it; returns the model directory."""
    examples = read_examples(train_file)
    labels = {label for _, label in examples}
    if labels != {0, 1}:
        raise SingleClassData(f"need both classes, got labels {sorted(labels)}")

    seed_everything(config.seed)
    tokenizer, model = load_base(config.base_model, num_labels=2)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)

    order = list(range(len(examples)))
    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        random.Random(config.seed + epoch).shuffle(order)
        total, count = 0.0, 0
        for start in range(0, len(order), config.batch_size):
            batch = [examples[i] for i in order[start:start + config.batch_size]]
            encoded = tokenizer(
                [text for text, _ in batch],
                padding=True,
                truncation=True,
                max_length=config.max_seq_len,
                return_tensors="pt",
            )
            target = torch.tensor([label for _, label in batch])
            optimizer.zero_grad()
            out = model(**encoded, labels=target)
            out.loss.backward()
            optimizer.step()
            total += out.loss.item() * len(batch)
            count += len(batch)
        epoch_losses.append(total / count)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    log = {
        "examples": len(examples),
        "epoch_losses": epoch_losses,
        "config": {
            "base_model": config.base_model,
            "max_seq_len": config.max_seq_len,
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "batch_size": config.batch_size,
            "seed": config.seed,
        },
    }
    (out_dir / TRAINING_LOG).write_text(json.dumps(log, indent=2) + "\n")
    return str(out_dir)
