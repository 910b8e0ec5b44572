#!/usr/bin/env python3
"""Produce and verify the checked-in golden metrics report.

Runs the full pipeline (fixture fetch -> parse -> filter -> 5-fold CV with
the builtin baseline, fixed seeds) on the bundled mini-corpus, recounts every
per-fold metric with an independent brute-force confusion-matrix pass, and
writes tests/fixtures/golden_report.json.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from trialscreen import backend, classifier, evaluation, keywords, registry
from trialscreen.parser import parse_trial

MINICORPUS = ROOT / "tests" / "fixtures" / "minicorpus"
GOLDEN = ROOT / "tests" / "fixtures" / "golden_report.json"
FOLD_SEED = 42
TRAIN_SEED = 0
K = 5


def load_labels(path: Path, exclusion):
    labels = {}
    for line in path.read_text().splitlines():
        obj = json.loads(line)
        if obj["exclusion"] == exclusion.value:
            labels[(obj["trial_id"], obj["ordinal"])] = obj["label"]
    return labels


def recount(criteria, labels, exclusion, plan, sets) -> None:
    """Independent recount: retrain per fold, then count tp/fp/fn by hand."""
    by_key = {c.key: c for c in criteria}
    candidates = keywords.filter_corpus(criteria, exclusion, sets)
    trial_gold = {t: 0 for t in plan.assignment}
    for m in candidates:
        if labels[m.criterion_key] == 1:
            trial_gold[m.criterion_key[0]] = 1

    report = evaluation.run_cv(
        criteria, labels, exclusion, plan, backend.BackendConfig(),
        keyword_sets=sets, hyperparams=classifier.Hyperparams(seed=TRAIN_SEED),
    )

    for fold in range(K):
        test_trials = set(plan.fold_trials(fold))
        train_ex = [
            classifier.LabeledExample(m.criterion_key, exclusion,
                                      by_key[m.criterion_key].tagged_text,
                                      labels[m.criterion_key])
            for m in candidates if m.criterion_key[0] not in test_trials
        ]
        model = classifier.train(train_ex, classifier.Hyperparams(seed=TRAIN_SEED))
        test = [m for m in candidates if m.criterion_key[0] in test_trials]
        pred = {
            m.criterion_key: int(model.score(by_key[m.criterion_key].tagged_text) >= 0.5)
            for m in test
        }

        def prf(pairs):
            tp = sum(1 for p, g in pairs if p == 1 and g == 1)
            fp = sum(1 for p, g in pairs if p == 1 and g == 0)
            fn = sum(1 for p, g in pairs if p == 0 and g == 1)
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / (tp + fn) if tp + fn else 0.0
            f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
            return precision, recall, f1

        crit_pairs = [(pred[m.criterion_key], labels[m.criterion_key]) for m in test]
        got = report["criterion"]["folds"][fold]
        expect = prf(crit_pairs)
        assert (got["precision"], got["recall"], got["f1"]) == expect, (
            exclusion, fold, "criterion", got, expect)

        trial_pred = {
            t: int(any(pred[m.criterion_key] for m in test if m.criterion_key[0] == t))
            for t in sorted(test_trials)
        }
        trial_pairs = [(trial_pred[t], trial_gold[t]) for t in sorted(test_trials)]
        got = report["trial"]["folds"][fold]
        expect = prf(trial_pairs)
        assert (got["precision"], got["recall"], got["f1"]) == expect, (
            exclusion, fold, "trial", got, expect)


def main() -> None:
    sets = keywords.default_keyword_sets()
    with tempfile.TemporaryDirectory() as tmp:
        store = registry.CorpusStore(Path(tmp) / "corpus")
        client = registry.RegistryClient(
            store, base_url=f"file://{MINICORPUS}", rate_limit=100000,
        )
        manifest = registry.CorpusManifest.load(MINICORPUS / "manifest.json")
        records, failures = client.fetch_batch(manifest)
        assert not failures, failures
        criteria = []
        for record in records:
            criteria.extend(parse_trial(record))

    plan = evaluation.make_folds(sorted({c.trial_id for c in criteria}), K, FOLD_SEED)
    report = {}
    for exclusion in keywords.ExclusionType:
        labels = load_labels(MINICORPUS / "labels_consensus.jsonl", exclusion)
        recount(criteria, labels, exclusion, plan, sets)
        report[exclusion.value] = evaluation.run_cv(
            criteria, labels, exclusion, plan, backend.BackendConfig(),
            keyword_sets=sets, hyperparams=classifier.Hyperparams(seed=TRAIN_SEED),
        )
        f1 = report[exclusion.value]["criterion"]["mean"]["f1"]
        print(f"{exclusion.value}: criterion F1 {f1:.3f} (recount OK)")
        assert f1 >= 0.95

    rounded = evaluation.round_report(report)
    GOLDEN.write_text(json.dumps(rounded, indent=2, sort_keys=True) + "\n")
    print(f"wrote {GOLDEN}")


if __name__ == "__main__":
    main()
