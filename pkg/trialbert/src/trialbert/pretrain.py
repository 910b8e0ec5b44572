"""Masked-language-model continued pre-training on an eligibility corpus.

The corpus is a plain text file, one criterion/section per line. Training
stops after a fixed number of optimizer steps (the corpus is cycled as
needed), with the standard 80/10/10 mask/random/keep split applied to the
configured fraction of tokens. The checkpoint is saved in the standard
layout so it can be used directly as a fine-tuning base.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer

from . import _quiet  # noqa: F401
from .configs import PretrainConfig
from .errors import BaseModelUnavailable, EmptyCorpus
from .finetune import seed_everything

PRETRAIN_LOG = "pretrain_log.json"


def read_corpus(path: str | Path) -> list[str]:
    lines = [l.strip() for l in Path(path).read_text().splitlines()]
    texts = [l for l in lines if l]
    if not texts:
        raise EmptyCorpus(f"no usable text in {path}")
    return texts


def mask_tokens(input_ids, tokenizer, mask_probability, generator):
    """Return (masked_inputs, labels) with -100 on unmasked positions."""
    labels = input_ids.clone()
    special = torch.tensor(
        [
            tokenizer.get_special_tokens_mask(row, already_has_special_tokens=True)
            for row in labels.tolist()
        ],
        dtype=torch.bool,
    )
    probs = torch.full(labels.shape, mask_probability)
    probs.masked_fill_(special, 0.0)
    masked = torch.bernoulli(probs, generator=generator).bool()
    labels[~masked] = -100

    replace = torch.bernoulli(torch.full(labels.shape, 0.8), generator=generator).bool() & masked
    input_ids = input_ids.clone()
    input_ids[replace] = tokenizer.mask_token_id

    rand = (
        torch.bernoulli(torch.full(labels.shape, 0.5), generator=generator).bool()
        & masked & ~replace
    )
    random_ids = torch.randint(
        len(tokenizer), labels.shape, dtype=torch.long, generator=generator
    )
    input_ids[rand] = random_ids[rand]
    return input_ids, labels


def pretrain_mlm(config: PretrainConfig, out_dir: str | Path) -> str:
    """Run MLM pre-training for config.steps steps; returns the model dir."""
    texts = read_corpus(config.corpus_path)
    seed_everything(config.seed)
    try:
        tokenizer = AutoTokenizer.from_pretrained(config.base_model)
        model = AutoModelForMaskedLM.from_pretrained(config.base_model)
    except (OSError, ValueError) as exc:
        raise BaseModelUnavailable(
            f"cannot load base model {config.base_model!r}: {exc}"
        )
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    generator = torch.Generator().manual_seed(config.seed)

    step_losses: list[float] = []
    cursor = 0
    for _ in range(config.steps):
        batch = [texts[(cursor + i) % len(texts)] for i in range(config.batch_size)]
        cursor = (cursor + config.batch_size) % len(texts)
        encoded = tokenizer(
            batch,
            padding=True,
            truncation=True,
            max_length=config.max_seq_len,
            return_tensors="pt",
        )
        input_ids, labels = mask_tokens(
            encoded["input_ids"], tokenizer, config.mask_probability, generator
        )
        optimizer.zero_grad()
        out = model(
            input_ids=input_ids,
            attention_mask=encoded["attention_mask"],
            labels=labels,
        )
        if torch.isnan(out.loss):
            # An all-unmasked batch contributes no signal; skip the update.
            step_losses.append(float("nan"))
            continue
        out.loss.backward()
        optimizer.step()
        step_losses.append(out.loss.item())

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    log = {
        "corpus_lines": len(texts),
        "step_losses": step_losses,
        "config": {
            "base_model": config.base_model,
            "batch_size": config.batch_size,
            "max_seq_len": config.max_seq_len,
            "learning_rate": config.learning_rate,
            "steps": config.steps,
            "mask_probability": config.mask_probability,
            "seed": config.seed,
        },
    }
    (out_dir / PRETRAIN_LOG).write_text(json.dumps(log, indent=2) + "\n")
    return str(out_dir)
