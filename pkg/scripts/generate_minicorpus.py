#!/usr/bin/env python3
"""Generate the bundled synthetic mini-corpus fixtures.

Writes registry-style response bodies (one per synthetic trial), a manifest,
criterion-level consensus labels, two annotator label files, and trial-level
gold derived by OR. Deterministic: re-running reproduces identical bytes.

The corpus is built from a fixed pool of criterion templates per exclusion
type, each carrying explicit gold labels for every exclusion whose keywords
it matches. The generator verifies template hits against the real matcher,
and patches fold coverage so every CV fold (k=5, seed=42) contains at least
one gold-positive candidate for every exclusion.
"""

from __future__ import annotations

import json
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from trialscreen import evaluation, keywords
from trialscreen.parser import parse_text

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "minicorpus"
N_TRIALS = 40
FOLD_K = 5
FOLD_SEED = 42

E = keywords.ExclusionType


@dataclass(frozen=True)
class Template:
    text: str
    section: str  # "inclusion" or "exclusion"
    labels: dict = field(default_factory=dict)  # ExclusionType -> 0/1


TEMPLATES: dict[E, list[Template]] = {
    E.PRIOR: [
        Template("No other malignancy within the past 5 years except adequately treated basal cell carcinoma", "exclusion", {E.PRIOR: 1}),
        Template("At least 5 years since completion of prior systemic chemotherapy", "inclusion", {E.PRIOR: 0}),
        Template("Prior malignancy is excluded unless the subject has been disease free for at least five years", "exclusion", {E.PRIOR: 1}),
        Template("Histologically confirmed breast cancer documented within 3 years of enrollment", "inclusion", {E.PRIOR: 0}),
        Template("No concurrent malignancy or prior invasive malignancy diagnosed in the last 3 years", "inclusion", {E.PRIOR: 1}),
        Template("More than 5 years may have elapsed since the initial diagnosis", "inclusion", {E.PRIOR: 0}),
    ],
    E.HIV: [
        Template("HIV positive patients are not eligible for this study", "exclusion", {E.HIV: 1}),
        Template("HIV testing will be offered to all participants at no cost", "inclusion", {E.HIV: 0}),
        Template("Known infection with human immunodeficiency virus or active AIDS-related illness", "exclusion", {E.HIV: 1}),
        Template("Documentation of hiv serology status is required before registration", "inclusion", {E.HIV: 0}),
    ],
    E.HBV: [
        Template("Active hepatitis B infection as shown by HBV surface antigen positivity", "exclusion", {E.HBV: 1, E.HCV: 0}),
        Template("Prior hepatitis B vaccination is permitted and will be recorded", "inclusion", {E.HBV: 0, E.HCV: 0}),
        Template("Chronic hepatitis B carriers are excluded from enrollment", "exclusion", {E.HBV: 1, E.HCV: 0}),
    ],
    E.HCV: [
        Template("Known hepatitis C infection with detectable HCV viral load", "exclusion", {E.HCV: 1, E.HBV: 0}),
        Template("Resolved hepatitis C treated more than a decade ago is allowed", "inclusion", {E.HCV: 0, E.HBV: 0}),
        Template("Seropositive for hepatitis C antibody at screening", "exclusion", {E.HCV: 1, E.HBV: 0}),
        Template("Patients must not have hepatitis B or hepatitis C infection", "inclusion", {E.HBV: 1, E.HCV: 1}),
    ],
    E.PSYCH: [
        Template("Serious psychiatric illness that would prevent informed consent", "exclusion", {E.PSYCH: 1}),
        Template("Known brain metastases or other central nervous system involvement", "exclusion", {E.PSYCH: 0}),
        Template("Major depression or psychosis requiring hospitalization in the last year", "exclusion", {E.PSYCH: 1}),
        Template("Psychological counseling services will be available throughout the trial", "inclusion", {E.PSYCH: 0}),
    ],
    E.SUBST: [
        Template("History of alcohol or drug abuse within the previous two years", "exclusion", {E.SUBST: 1}),
        Template("Concurrent treatment with any other investigational drug is not allowed", "exclusion", {E.SUBST: 0}),
        Template("Ongoing illicit substance use or chronic alcoholism", "exclusion", {E.SUBST: 1}),
        Template("All study drugs will be dispensed by the central pharmacy", "inclusion", {E.SUBST: 0}),
    ],
    E.AUTO: [
        Template("Active autoimmune disease requiring systemic immunosuppressive therapy", "exclusion", {E.AUTO: 1}),
        Template("Uncontrolled systemic hypertension despite optimal medical management", "exclusion", {E.AUTO: 0}),
        Template("History of autoimmune disorders such as lupus or rheumatoid arthritis", "exclusion", {E.AUTO: 1}),
        Template("Stable autoimmune thyroiditis controlled with replacement therapy is acceptable", "inclusion", {E.AUTO: 0}),
    ],
}

FILLERS = [
    Template("Age 18 or older at the time of consent", "inclusion"),
    Template("ECOG performance status of 0 or 1", "inclusion"),
    Template("Able to provide written informed consent", "inclusion"),
    Template("Adequate renal function per institutional standards", "inclusion"),
]


def verify_templates(sets) -> None:
    """Each template's declared labels must equal its actual keyword hits."""
    matchers = {e: keywords.compile_keywords(s) for e, s in sets.items()}
    for pool in list(TEMPLATES.values()) + [FILLERS]:
        for tpl in pool:
            tagged = f"{tpl.section}: {tpl.text}"
            hit_set = {e for e, m in matchers.items() if m.search(tagged)}
            declared = set(tpl.labels)
            if hit_set != declared:
                raise SystemExit(
                    f"template {tpl.text!r}: hits {sorted(e.value for e in hit_set)} "
                    f"!= declared {sorted(e.value for e in declared)}"
                )


def trial_id(i: int) -> str:
    return f"NCT{90000000 + i}"


def build_trials() -> dict[str, list[Template]]:
    """Three exclusion slots per trial plus a filler, round-robin templates."""
    exclusions = list(E)
    counters = {e: 0 for e in E}
    trials: dict[str, list[Template]] = {}
    for i in range(N_TRIALS):
        slots = [exclusions[(i + off) % 7] for off in (0, 2, 5)]
        items: list[Template] = []
        for e in slots:
            pool = TEMPLATES[e]
            items.append(pool[counters[e] % len(pool)])
            counters[e] += 1
        items.append(FILLERS[i % len(FILLERS)])
        trials[trial_id(i)] = items
    return trials


def patch_fold_coverage(trials: dict[str, list[Template]]) -> None:
    """Ensure every (exclusion, fold) has a gold-positive candidate trial."""
    plan = evaluation.make_folds(sorted(trials), FOLD_K, FOLD_SEED)
    positive_templates = {
        e: next(t for t in TEMPLATES[e] if t.labels.get(e) == 1) for e in E
    }
    for e in E:
        for fold in range(FOLD_K):
            fold_trials = plan.fold_trials(fold)
            if any(
                tpl.labels.get(e) == 1
                for t in fold_trials
                for tpl in trials[t]
            ):
                continue
            target = fold_trials[0]
            trials[target].append(positive_templates[e])
            print(f"patched {e.value} fold {fold}: added positive to {target}")


def eligibility_text(items: list[Template]) -> str:
    inclusion = [t.text for t in items if t.section == "inclusion"]
    exclusion = [t.text for t in items if t.section == "exclusion"]
    parts = []
    if inclusion:
        parts.append("Inclusion Criteria:\n\n" + "\n".join(f"- {t}" for t in inclusion))
    if exclusion:
        parts.append("Exclusion Criteria:\n\n" + "\n".join(f"- {t}" for t in exclusion))
    return "\n\n".join(parts)


def main() -> None:
    sets = keywords.default_keyword_sets()
    verify_templates(sets)
    trials = build_trials()
    patch_fold_coverage(trials)

    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    label_by_text = {
        tpl.text: tpl.labels for pool in TEMPLATES.values() for tpl in pool
    }

    all_criteria = []
    for tid in sorted(trials):
        text = eligibility_text(trials[tid])
        body = {
            "protocolSection": {
                "identificationModule": {"nctId": tid},
                "eligibilityModule": {"eligibilityCriteria": text},
            }
        }
        (FIXTURE_DIR / f"{tid}.json").write_text(
            json.dumps(body, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        all_criteria.extend(parse_text(tid, text))

    manifest = {
        "trial_ids": sorted(trials),
        "created_at": "1970-01-01T00:00:00+00:00",
        "description": "synthetic separable mini-corpus for golden-run tests",
    }
    (FIXTURE_DIR / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )

    # Consensus labels: one record per (criterion, matched exclusion).
    consensus_rows = []
    trial_gold: dict[tuple[str, str], int] = {}
    for e in E:
        for m in keywords.filter_corpus(all_criteria, e, sets):
            crit = next(c for c in all_criteria if c.key == m.criterion_key)
            label = label_by_text[crit.text][e]
            consensus_rows.append(
                {
                    "trial_id": m.criterion_key[0],
                    "ordinal": m.criterion_key[1],
                    "exclusion": e.value,
                    "label": label,
                    "annotator": "consensus",
                }
            )
            key = (m.criterion_key[0], e.value)
            trial_gold[key] = max(trial_gold.get(key, 0), label)

    def write_jsonl(path: Path, rows) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    write_jsonl(FIXTURE_DIR / "labels_consensus.jsonl", consensus_rows)

    # Annotator files for agreement ops: A = consensus, B = consensus with a
    # seeded 5% of labels flipped.
    rng = random.Random(7)
    rows_b = []
    for row in consensus_rows:
        flipped = dict(row, annotator="annotator_b")
        if rng.random() < 0.05:
            flipped["label"] = 1 - flipped["label"]
        rows_b.append(flipped)
    write_jsonl(
        FIXTURE_DIR / "labels_annotator_a.jsonl",
        [dict(r, annotator="annotator_a") for r in consensus_rows],
    )
    write_jsonl(FIXTURE_DIR / "labels_annotator_b.jsonl", rows_b)

    trial_rows = [
        {"trial_id": t, "exclusion": e, "label": lab}
        for (t, e), lab in sorted(trial_gold.items())
    ]
    write_jsonl(FIXTURE_DIR / "trial_labels.jsonl", trial_rows)

    n_candidates = len(consensus_rows)
    print(f"{len(trials)} trials, {len(all_criteria)} criteria, "
          f"{n_candidates} labeled (criterion, exclusion) candidates")


if __name__ == "__main__":
    main()
