import json
from pathlib import Path

import pytest

from trialbert.configs import FinetuneConfig
from trialbert.errors import BaseModelUnavailable, SingleClassData
from trialbert.finetune import finetune, read_examples


def training_log(model_dir):
    return json.loads((Path(model_dir) / "training_log.json").read_text())


class TestFinetune:
    def test_loss_strictly_decreases_over_first_three_epochs(
        self, tiny_base, train_file, tmp_path
    ):
        config = FinetuneConfig(base_model=tiny_base, max_seq_len=64, epochs=3,
                                learning_rate=5e-3, batch_size=8, seed=0)
        out = finetune(train_file, config, tmp_path / "m")
        losses = training_log(out)["epoch_losses"]
        assert len(losses) == 3
        assert losses[0] > losses[1] > losses[2]

    def test_deterministic_final_loss(self, tiny_base, train_file, tmp_path):
        config = FinetuneConfig(base_model=tiny_base, max_seq_len=64, epochs=2,
                                learning_rate=5e-3, batch_size=8, seed=7)
        finals = []
        for name in ("a", "b"):
            out = finetune(train_file, config, tmp_path / name)
            finals.append(training_log(out)["epoch_losses"][-1])
        assert abs(finals[0] - finals[1]) <= 1e-6

    def test_single_class_rejected(self, tiny_base, tmp_path):
        train = tmp_path / "one_class.jsonl"
        train.write_text(
            "\n".join(json.dumps({"text": f"t{i}", "label": 1}) for i in range(4))
            + "\n"
        )
        with pytest.raises(SingleClassData):
            finetune(train, FinetuneConfig(base_model=tiny_base), tmp_path / "m")

    def test_missing_base_model(self, train_file, tmp_path):
        config = FinetuneConfig(base_model=str(tmp_path / "no-such-model"))
        with pytest.raises(BaseModelUnavailable):
            finetune(train_file, config, tmp_path / "m")

    def test_read_examples_reports_bad_lines(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"text": "x"}\n')
        with pytest.raises(ValueError, match="bad.jsonl:1"):
            read_examples(bad)

    def test_extra_fields_ignored(self, tmp_path):
        train = tmp_path / "extra.jsonl"
        train.write_text(json.dumps(
            {"text": "x", "label": 0, "trial_id": "NCT00000001", "ordinal": 2}
        ) + "\n")
        assert read_examples(train) == [("x", 0)]
