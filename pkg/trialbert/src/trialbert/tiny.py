"""Build a tiny randomly-initialized encoder for fast CPU tests and demos.

The vocabulary is derived from a text corpus (whole lowercase words, no
subword merges — unseen words map to [UNK]), and the encoder is a 2-layer
BERT small enough that fine-tuning and MLM smoke runs finish in seconds.
"""

from __future__ import annotations

import re
from pathlib import Path

import torch
from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

from . import _quiet  # noqa: F401

SPECIAL_TOKENS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
_WORD_RE = re.compile(r"[a-z0-9]+")


def corpus_vocabulary(texts: list[str]) -> list[str]:
    """Sorted unique lowercase word tokens, prefixed with special tokens."""
    words = set()
    for text in texts:
        words.update(_WORD_RE.findall(text.lower()))
    return SPECIAL_TOKENS + sorted(words)


def make_tiny_base(
    texts: list[str],
    out_dir: str | Path,
    hidden_size: int = 32,
    num_layers: int = 2,
    num_heads: int = 2,
    max_seq_len: int = 512,
    seed: int = 0,
) -> str:
    """Write a tokenizer + randomly-initialized tiny BERT to out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    vocab_file = out_dir / "vocab.txt"
    vocab_file.write_text("\n".join(corpus_vocabulary(texts)) + "\n")
    tokenizer = BertTokenizerFast(str(vocab_file), do_lower_case=True)
    tokenizer.save_pretrained(out_dir)

    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=hidden_size * 4,
        max_position_embeddings=max_seq_len,
    )
    torch.manual_seed(seed)
    model = BertForMaskedLM(config)
    model.save_pretrained(out_dir)
    return str(out_dir)
