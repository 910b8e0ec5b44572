import json
from pathlib import Path

import pytest

from trialbert.configs import FinetuneConfig
from trialbert.finetune import finetune
from trialbert.tiny import make_tiny_base

# Mini-corpus fixtures shipped with the pipeline package next door.
PIPELINE_FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"
MINICORPUS_DIR = PIPELINE_FIXTURES / "minicorpus"

POSITIVE_TEXTS = [
    "exclusion: known hiv infection or aids diagnosis",
    "exclusion: patients who are hiv positive are not eligible",
    "exclusion: history of human immunodeficiency virus infection",
    "exclusion: seropositive for hiv at screening",
]
NEGATIVE_TEXTS = [
    "inclusion: adults with histologically confirmed disease",
    "inclusion: adequate organ function and performance status",
    "inclusion: measurable disease by imaging criteria",
    "inclusion: willing to provide written informed consent",
]


def write_train_file(path: Path, repeats: int = 5) -> Path:
    """40-example linearly separable training set as JSON lines."""
    with open(path, "w") as fh:
        for _ in range(repeats):
            for text in POSITIVE_TEXTS:
                fh.write(json.dumps({"text": text, "label": 1}) + "\n")
            for text in NEGATIVE_TEXTS:
                fh.write(json.dumps({"text": text, "label": 0}) + "\n")
    return path


@pytest.fixture(scope="session")
def tiny_base(tmp_path_factory):
    """Randomly-initialized 2-layer encoder over the synthetic vocabulary."""
    out = tmp_path_factory.mktemp("tiny") / "base"
    make_tiny_base(POSITIVE_TEXTS + NEGATIVE_TEXTS, out, max_seq_len=512, seed=0)
    return str(out)


@pytest.fixture(scope="session")
def train_file(tmp_path_factory):
    return write_train_file(tmp_path_factory.mktemp("data") / "train.jsonl")


@pytest.fixture(scope="session")
def finetuned_model(tiny_base, train_file, tmp_path_factory):
    """A classifier that separates the synthetic set, used by server tests."""
    out = tmp_path_factory.mktemp("model") / "classifier"
    config = FinetuneConfig(base_model=tiny_base, max_seq_len=64, epochs=8,
                            learning_rate=5e-3, batch_size=8, seed=0)
    return finetune(train_file, config, out)
