"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The learning criterion drives the pipeline package's cross-validation with
this package's server over the wire protocol, exactly as a production
deployment would: per fold, fine-tune the tiny encoder on the training
split, then serve it as a child process for scoring.
"""

import json
import sys
import time
from pathlib import Path

import pytest

from conftest import MINICORPUS_DIR
from trialbert.configs import FinetuneConfig, PretrainConfig
from trialbert.finetune import finetune
from trialbert.pretrain import pretrain_mlm
from trialbert.tiny import make_tiny_base

trialscreen = pytest.importorskip("trialscreen")

from trialscreen.backend import BackendConfig, BackendKind, RemoteBackend  # noqa: E402
from trialscreen.evaluation import make_folds, run_cv  # noqa: E402
from trialscreen.keywords import ExclusionType  # noqa: E402
from trialscreen.parser import parse_text  # noqa: E402


def _report(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def load_minicorpus():
    criteria = []
    for path in sorted(MINICORPUS_DIR.glob("NCT*.json")):
        body = json.loads(path.read_text())
        text = body["protocolSection"]["eligibilityModule"]["eligibilityCriteria"]
        criteria.extend(parse_text(path.stem, text))
    labels = {}
    with open(MINICORPUS_DIR / "labels_consensus.jsonl") as fh:
        for line in fh:
            obj = json.loads(line)
            if obj["exclusion"] == ExclusionType.HIV.value:
                labels[(obj["trial_id"], obj["ordinal"])] = obj["label"]
    return criteria, labels


class FinetunedServerBackend:
    """fit() fine-tunes the tiny encoder; predictions go over the protocol."""

    def __init__(self, base_dir: str, workdir: Path, fold: int):
        self.base_dir = base_dir
        self.workdir = workdir / f"fold{fold}"
        self.remote = None

    def fit(self, examples):
        self.workdir.mkdir(parents=True)
        train_file = self.workdir / "train.jsonl"
        with open(train_file, "w") as fh:
            for ex in examples:
                fh.write(json.dumps({"text": ex.tagged_text, "label": ex.label}) + "\n")
        config = FinetuneConfig(base_model=self.base_dir, max_seq_len=64,
                                epochs=10, learning_rate=5e-3, batch_size=8,
                                seed=0)
        model_dir = finetune(train_file, config, self.workdir / "model")
        endpoint = (
            f"exec:{sys.executable} -m trialbert.cli serve"
            f" --model-dir {model_dir} --max-seq-len 64"
        )
        self.remote = RemoteBackend(
            BackendConfig(kind=BackendKind.REMOTE, endpoint=endpoint)
        )

    def predict_scores(self, texts):
        return self.remote.predict_scores(texts)

    def close(self):
        if self.remote is not None:
            self.remote.close()


class TestAcceptance:
    def test_protocol_conformance(self, finetuned_model):
        # The pipeline's remote client is the strictest protocol checker:
        # it rejects wrong counts, unknown ids, and out-of-range scores.
        endpoint = (
            f"exec:{sys.executable} -m trialbert.cli serve"
            f" --model-dir {finetuned_model} --max-seq-len 64"
        )
        remote = RemoteBackend(
            BackendConfig(kind=BackendKind.REMOTE, endpoint=endpoint, batch_size=2)
        )
        try:
            assert remote.predict_scores([]) == []
            scores = remote.predict_scores([f"criterion {i}" for i in range(5)])
        finally:
            remote.close()
        assert len(scores) == 5
        assert all(0.0 <= s <= 1.0 for s in scores)
        _report("protocol conformance (tiny encoder behind the pipeline's "
                "remote client: ids, counts, score range, empty batch)")

    def test_tiny_model_learning_under_cross_validation(self, tmp_path):
        start = time.monotonic()
        criteria, labels = load_minicorpus()
        base_dir = make_tiny_base([c.tagged_text for c in criteria],
                                  tmp_path / "base", max_seq_len=64, seed=0)
        plan = make_folds(sorted({c.trial_id for c in criteria}), 5, 42)

        fold_counter = iter(range(plan.k))

        def factory():
            return FinetunedServerBackend(base_dir, tmp_path, next(fold_counter))

        result = run_cv(criteria, labels, ExclusionType.HIV, plan, factory)
        f1 = result["criterion"]["mean"]["f1"]
        elapsed = time.monotonic() - start
        assert f1 >= 0.9, result["criterion"]
        assert elapsed < 600
        _report(f"tiny-model learning (criterion F1 {f1:.3f} >= 0.9 under "
                f"5-fold CV via remote backend, {elapsed:.0f} s < 600 s)")

    def test_pretraining_recipe(self, tiny_base, train_file, tmp_path):
        config = PretrainConfig(corpus_path="corpus.txt", base_model="base")
        assert (
            config.batch_size,
            config.max_seq_len,
            config.learning_rate,
            config.steps,
            config.mask_probability,
        ) == (64, 512, 2e-05, 10000, 0.15)
        with pytest.raises(ValueError):
            PretrainConfig(corpus_path="c", base_model="b", mask_probability=0.0)

        corpus = tmp_path / "corpus.txt"
        corpus.write_text(
            "\n".join(f"criterion {i}: patients with condition {i}"
                      for i in range(100)) + "\n"
        )
        smoke = PretrainConfig(corpus_path=str(corpus), base_model=tiny_base,
                               batch_size=8, max_seq_len=64, learning_rate=1e-3,
                               steps=10, seed=0)
        checkpoint = pretrain_mlm(smoke, tmp_path / "mlm")
        ft = FinetuneConfig(base_model=checkpoint, max_seq_len=64, epochs=1,
                            learning_rate=5e-3, batch_size=8, seed=0)
        out = finetune(train_file, ft, tmp_path / "clf")
        assert (Path(out) / "training_log.json").exists()
        _report("pre-training recipe (defaults 64/512/2e-05/10000/0.15; "
                "10-step smoke checkpoint fine-tunes)")
