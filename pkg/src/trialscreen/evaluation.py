"""Trial-level cross-validation, metrics, OR-aggregation, and agreement.

Folds are assigned per trial, never per criterion, so criteria from one
trial cannot straddle the train/test boundary; that leakage-freedom is
re-asserted on every run. A trial is predicted positive for an exclusion
iff at least one of its candidate criteria is predicted positive.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .backend import BackendConfig, make_backend
from .classifier import Hyperparams, LabeledExample, Prediction
from .errors import (
    EmptyInput,
    LengthMismatch,
    MissingLabel,
    TooFewTrials,
    UnknownTrial,
)
from .keywords import ExclusionType, KeywordSet, filter_corpus
from .parser import Criterion


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    assignment: dict[str, int]  # trial_id -> fold index

    def fold_trials(self, fold: int) -> list[str]:
        return sorted(t for t, f in self.assignment.items() if f == fold)

    def train_trials(self, fold: int) -> list[str]:
        return sorted(t for t, f in self.assignment.items() if f != fold)


def make_folds(trial_ids: list[str], k: int, seed: int) -> FoldPlan:
    """Deterministic trial-level folds: sort, seeded shuffle, round-robin."""
    unique = sorted(set(trial_ids))
    if k < 2:
        raise TooFewTrials("k must be at least 2")
    if k > len(unique):
        raise TooFewTrials(f"cannot make {k} folds from {len(unique)} trials")
    rng = random.Random(seed)
    rng.shuffle(unique)
    assignment = {trial: i % k for i, trial in enumerate(unique)}
    return FoldPlan(k, seed, assignment)


@dataclass(frozen=True)
class TrialPrediction:
    trial_id: str
    exclusion: ExclusionType | None
    label: int
    supporting: tuple[tuple[str, int], ...]  # criterion keys predicted positive


def aggregate_trial(
    predictions: list[Prediction],
    all_trial_ids: list[str],
    exclusion: ExclusionType | None = None,
) -> list[TrialPrediction]:
    """OR over each trial's criterion labels; no candidates means negative."""
    known = set(all_trial_ids)
    supporting: dict[str, list[tuple[str, int]]] = {t: [] for t in all_trial_ids}
    for p in predictions:
        if p.criterion_key is None:
            raise UnknownTrial("prediction lacks a criterion key")
        trial = p.criterion_key[0]
        if trial not in known:
            raise UnknownTrial(f"prediction for unlisted trial {trial}")
        if p.label == 1:
            supporting[trial].append(p.criterion_key)
    return [
        TrialPrediction(t, exclusion, int(bool(supporting[t])), tuple(supporting[t]))
        for t in all_trial_ids
    ]


def compute_metrics(predicted: list[int], gold: list[int]) -> dict:
    """Positive-class precision/recall/F1; zero denominators give 0 + flag."""
    if len(predicted) != len(gold):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(gold)} gold labels")
    tp = sum(1 for p, g in zip(predicted, gold) if p == 1 and g == 1)
    fp = sum(1 for p, g in zip(predicted, gold) if p == 1 and g == 0)
    fn = sum(1 for p, g in zip(predicted, gold) if p == 0 and g == 1)
    flags: list[str] = []
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append("no_predicted_positives")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append("no_gold_positives")
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return {"precision": precision, "recall": recall, "f1": f1, "flags": flags}


@dataclass(frozen=True)
class AgreementStats:
    sample_size: int
    kappa: float
    agreement_accuracy: float
    degenerate_marginals: bool = False


def cohen_kappa(labels_a: list[int], labels_b: list[int]) -> AgreementStats:
    """Two-annotator Cohen's kappa from the 2x2 table.

    With degenerate marginals (chance agreement 1, e.g. both annotators give
    one constant label) kappa is defined as 1 when observed agreement is
    perfect, else 0, and flagged: heavy class imbalance skews the statistic.
    """
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    n = len(labels_a)
    if n == 0:
        raise EmptyInput("no labels to compare")
    p_o = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    pa1 = sum(labels_a) / n
    pb1 = sum(labels_b) / n
    p_e = pa1 * pb1 + (1 - pa1) * (1 - pb1)
    if p_e >= 1.0:
        return AgreementStats(n, 1.0 if p_o == 1.0 else 0.0, p_o, True)
    kappa = (p_o - p_e) / (1 - p_e)
    return AgreementStats(n, kappa, p_o)


def derive_trial_gold(
    candidates: list,  # KeywordMatch list
    criterion_labels: dict[tuple[str, int], int],
    all_trial_ids: list[str],
) -> dict[str, int]:
    """Trial gold by OR over the trial's candidate criterion labels."""
    gold = {t: 0 for t in all_trial_ids}
    for m in candidates:
        if criterion_labels[m.criterion_key] == 1:
            gold[m.criterion_key[0]] = 1
    return gold


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _summarize(folds: list[dict]) -> dict:
    mean = {
        key: _mean([f[key] for f in folds]) for key in ("precision", "recall", "f1")
    }
    mean["flags"] = sorted({flag for f in folds for flag in f["flags"]})
    return mean


def run_cv(
    criteria: list[Criterion],
    criterion_labels: dict[tuple[str, int], int],
    exclusion: ExclusionType,
    fold_plan: FoldPlan,
    backend: BackendConfig | object,
    keyword_sets: dict[ExclusionType, KeywordSet] | None = None,
    trial_gold: dict[str, int] | None = None,
    hyperparams: Hyperparams | None = None,
    threshold: float = 0.5,
) -> dict:
    """Leakage-free k-fold CV for one exclusion type.

    For each fold: train the backend on out-of-fold candidate criteria,
    predict in-fold candidates, score at the criterion level over in-fold
    candidates and at the trial level over all in-fold trials. `backend`
    may be a BackendConfig, a zero-argument factory, or a fit/predict object
    reused across folds. Deterministic given the fold plan and seeds.
    """
    candidates = filter_corpus(criteria, exclusion, keyword_sets)
    for m in candidates:
        if m.criterion_key not in criterion_labels:
            raise MissingLabel(f"no label for candidate {m.criterion_key}")

    by_key = {c.key: c for c in criteria}
    all_trials = sorted(fold_plan.assignment)
    gold_by_trial = trial_gold or derive_trial_gold(candidates, criterion_labels, all_trials)

    if isinstance(backend, BackendConfig):
        cfg = backend

        def factory():
            b = make_backend(cfg)
            if hyperparams is not None and hasattr(b, "hyperparams"):
                b.hyperparams = hyperparams
            return b

    elif callable(backend):
        factory = backend
    else:
        factory = lambda: backend  # noqa: E731 - reuse one fit/predict object

    criterion_folds: list[dict] = []
    trial_folds: list[dict] = []
    for fold in range(fold_plan.k):
        test_trials = fold_plan.fold_trials(fold)
        train_trials = set(fold_plan.train_trials(fold))
        assert not train_trials & set(test_trials), "trial leakage across folds"

        train_examples = [
            LabeledExample(
                m.criterion_key,
                exclusion,
                by_key[m.criterion_key].tagged_text,
                criterion_labels[m.criterion_key],
            )
            for m in candidates
            if m.criterion_key[0] in train_trials
        ]
        test_candidates = [m for m in candidates if m.criterion_key[0] in set(test_trials)]

        model = factory()
        model.fit(train_examples)
        texts = [by_key[m.criterion_key].tagged_text for m in test_candidates]
        scores = model.predict_scores(texts) if texts else []
        predictions = [
            Prediction(m.criterion_key, exclusion, s, int(s >= threshold))
            for m, s in zip(test_candidates, scores)
        ]
        if hasattr(model, "close"):
            model.close()

        predicted = [p.label for p in predictions]
        gold = [criterion_labels[m.criterion_key] for m in test_candidates]
        criterion_folds.append(compute_metrics(predicted, gold))

        trial_preds = aggregate_trial(predictions, test_trials, exclusion)
        trial_folds.append(
            compute_metrics(
                [tp.label for tp in trial_preds],
                [gold_by_trial[t] for t in test_trials],
            )
        )

    return {
        "exclusion": exclusion.value,
        "k": fold_plan.k,
        "fold_seed": fold_plan.seed,
        "criterion": {"folds": criterion_folds, "mean": _summarize(criterion_folds)},
        "trial": {"folds": trial_folds, "mean": _summarize(trial_folds)},
    }


def render_report(report: dict) -> str:
    """Aligned plain-text table: per exclusion, criterion- and trial-level means."""
    header = (
        f"{'Exclusion':<10}"
        f"{'Crit P':>8}{'Crit R':>8}{'Crit F1':>9}"
        f"{'Trial P':>9}{'Trial R':>9}{'Trial F1':>10}"
    )
    lines = [header, "-" * len(header)]
    for exclusion in sorted(report):
        entry = report[exclusion]
        c = entry["criterion"]["mean"]
        t = entry["trial"]["mean"]
        lines.append(
            f"{exclusion:<10}"
            f"{c['precision']:>8.2f}{c['recall']:>8.2f}{c['f1']:>9.2f}"
            f"{t['precision']:>9.2f}{t['recall']:>9.2f}{t['f1']:>10.2f}"
        )
    return "\n".join(lines) + "\n"


def round_report(report: dict, digits: int = 10):
    """Round all float leaves so serialized reports are platform-stable."""
    if isinstance(report, float):
        return round(report, digits)
    if isinstance(report, dict):
        return {k: round_report(v, digits) for k, v in report.items()}
    if isinstance(report, list):
        return [round_report(v, digits) for v in report]
    return report
