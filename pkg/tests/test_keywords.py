import random

import pytest

from trialscreen.errors import EmptyKeywordSet, MissingLabel
from trialscreen.keywords import (
    ExclusionType,
    KeywordSet,
    compile_keywords,
    default_keyword_sets,
    filter_corpus,
    keyword_metrics,
    match_criterion,
    normalize,
)
from trialscreen.parser import Criterion, SectionKind

E = ExclusionType


def crit(text, trial="NCT00000001", ordinal=0, section=SectionKind.EXCLUSION):
    return Criterion(trial, section, ordinal, text)


class TestMatcher:
    def test_subst_hits_drug_and_abuse(self, default_sets):
        m = compile_keywords(default_sets[E.SUBST])
        phrases = {p for p, _ in m.search("no history of DRUG abuse")}
        assert phrases == {"drug", "abuse"}

    def test_hyphen_space_normalization(self, default_sets):
        m = compile_keywords(default_sets[E.PRIOR])
        phrases = {p for p, _ in m.search("carcinoma in situ of the cervix")}
        assert "in-situ" in phrases

    def test_word_boundary_blocks_substrings(self, default_sets):
        m = compile_keywords(default_sets[E.HIV])
        assert m.search("archive of records") == []

    def test_drugstore_not_matched(self, default_sets):
        m = compile_keywords(default_sets[E.SUBST])
        assert "drug" not in {p for p, _ in m.search("bought at the drugstore")}

    def test_spans_normalize_back_to_phrase(self, default_sets):
        text = "exclusion: Carcinoma  in-situ and known SQUAMOUS cell   carcinoma"
        m = compile_keywords(default_sets[E.PRIOR])
        for phrase, (start, end) in m.search(text):
            assert normalize(text[start:end]) == normalize(phrase)

    def test_empty_keyword_set_rejected(self):
        with pytest.raises(EmptyKeywordSet):
            compile_keywords(KeywordSet(E.AUTO, ()))

    def test_overlapping_phrases_all_reported(self, default_sets):
        m = compile_keywords(default_sets[E.SUBST])
        phrases = {p for p, _ in m.search("chronic alcoholism noted")}
        assert {"alcoholism", "chronic alcoholism"} <= phrases


class TestMatchCriterion:
    def test_hiv_positive(self, default_sets):
        c = crit("HIV positive")
        m = match_criterion(c, compile_keywords(default_sets[E.HIV]))
        assert m is not None
        assert m.phrases == ("hiv",)
        assert m.criterion_key == c.key

    def test_multi_exclusion_row(self, default_sets):
        text = (
            "Patients must not be human immunodeficiency virus (HIV), hepatitis B "
            "surface antigen (HBSag), or hepatitis (Hep) C positive"
        )
        c = crit(text, section=SectionKind.INCLUSION)
        hiv = match_criterion(c, compile_keywords(default_sets[E.HIV]))
        assert set(hiv.phrases) == {"human immunodeficiency virus", "hiv"}
        hbv = match_criterion(c, compile_keywords(default_sets[E.HBV]))
        assert set(hbv.phrases) == {"hepatitis"}
        hcv = match_criterion(c, compile_keywords(default_sets[E.HCV]))
        assert set(hcv.phrases) == {"hepatitis"}

    def test_nervous_is_a_designed_false_candidate(self, default_sets):
        c = crit("Known brain or other central nervous system (CNS) metastases")
        m = match_criterion(c, compile_keywords(default_sets[E.PSYCH]))
        assert m.phrases == ("nervous",)

    def test_no_hit_returns_none(self, default_sets):
        c = crit("Age 18 or older")
        assert match_criterion(c, compile_keywords(default_sets[E.AUTO])) is None


class TestFilterCorpus:
    def test_exemplar_hiv_candidates(self, exemplar_criteria, default_sets):
        matches = filter_corpus(exemplar_criteria, E.HIV, default_sets)
        assert [m.criterion_key[0] for m in matches] == ["NCT00075803", "NCT00114101"]

    def test_empty_corpus(self, default_sets):
        assert filter_corpus([], E.HIV, default_sets) == []

    def test_no_auto_phrases_no_matches(self, default_sets):
        corpus = [crit("Age 18 or older"), crit("ECOG 0-1", ordinal=1)]
        assert filter_corpus(corpus, E.AUTO, default_sets) == []

    def test_equals_per_criterion_scan(self, minicorpus_criteria, default_sets):
        # Brute-force oracle: filter_corpus is exactly the criteria where
        # match_criterion is not None, in corpus order.
        for e in E:
            matcher = compile_keywords(default_sets[e])
            expected = [
                c.key for c in minicorpus_criteria
                if match_criterion(c, matcher) is not None
            ]
            got = [m.criterion_key for m in filter_corpus(minicorpus_criteria, e, default_sets)]
            assert got == expected

    def test_monotonicity_under_phrase_changes(self, minicorpus_criteria, default_sets):
        rng = random.Random(11)
        for _ in range(20):
            e = rng.choice(list(E))
            base = default_sets[e]
            full = {m.criterion_key for m in filter_corpus(minicorpus_criteria, e, default_sets)}
            phrase = rng.choice(base.phrases)
            smaller_sets = dict(default_sets)
            reduced = base.without(phrase)
            if not reduced.phrases:
                continue
            smaller_sets[e] = reduced
            smaller = {
                m.criterion_key
                for m in filter_corpus(minicorpus_criteria, e, smaller_sets)
            }
            assert smaller <= full


class TestKeywordMetrics:
    def _matches(self, keys, exclusion=E.HIV):
        from trialscreen.keywords import KeywordMatch

        return [KeywordMatch(key, exclusion, (("hiv", (0, 3)),)) for key in keys]

    def test_precision_direct_ratio(self):
        keys = [("NCT00000001", 0), ("NCT00000002", 0), ("NCT00000003", 0), ("NCT00000004", 0)]
        matches = self._matches(keys)
        criterion_labels = dict(zip(keys, [1, 1, 1, 0]))
        trial_labels = {k[0]: lab for k, lab in criterion_labels.items()}
        metrics = keyword_metrics(matches, criterion_labels, trial_labels)
        assert metrics.precision == 0.75

    def test_recall_over_positive_trials(self):
        # 10 positive trials, 9 of them with a match.
        trial_labels = {f"NCT{10000000 + i}": 1 for i in range(10)}
        keys = [(t, 0) for t in sorted(trial_labels)[:9]]
        matches = self._matches(keys)
        criterion_labels = {k: 1 for k in keys}
        metrics = keyword_metrics(matches, criterion_labels, trial_labels)
        assert metrics.recall == 0.9

    def test_missing_label_raises(self):
        matches = self._matches([("NCT00000001", 0)])
        with pytest.raises(MissingLabel):
            keyword_metrics(matches, {}, {"NCT00000001": 1})

    def test_brute_force_recount_on_minicorpus(self, minicorpus_criteria, default_sets):
        from conftest import MINICORPUS_DIR, load_labels, load_trial_labels

        for e in E:
            matches = filter_corpus(minicorpus_criteria, e, default_sets)
            crit_labels = load_labels(MINICORPUS_DIR / "labels_consensus.jsonl", e)
            trial_labels = load_trial_labels(MINICORPUS_DIR / "trial_labels.jsonl", e)
            # trials with no positive candidates are negative at trial level
            for c in minicorpus_criteria:
                trial_labels.setdefault(c.trial_id, 0)
            metrics = keyword_metrics(matches, crit_labels, trial_labels)

            # independent spreadsheet-style recount
            matched_keys = [m.criterion_key for m in matches]
            pos = sum(crit_labels[k] for k in matched_keys)
            expect_precision = pos / len(matched_keys) if matched_keys else 0.0
            matched_trials = {k[0] for k in matched_keys}
            pos_trials = [t for t, lab in trial_labels.items() if lab == 1]
            expect_recall = (
                sum(1 for t in pos_trials if t in matched_trials) / len(pos_trials)
                if pos_trials else 0.0
            )
            expect_accuracy = sum(
                1 for t, lab in trial_labels.items() if int(t in matched_trials) == lab
            ) / len(trial_labels)
            assert metrics.precision == pytest.approx(expect_precision)
            assert metrics.recall == pytest.approx(expect_recall)
            assert metrics.accuracy == pytest.approx(expect_accuracy)

    def test_ablation_never_raises_recall(self, minicorpus_criteria, default_sets):
        e = E.PSYCH
        matches = filter_corpus(minicorpus_criteria, e, default_sets)
        from conftest import MINICORPUS_DIR, load_labels, load_trial_labels

        crit_labels = load_labels(MINICORPUS_DIR / "labels_consensus.jsonl", e)
        trial_labels = load_trial_labels(MINICORPUS_DIR / "trial_labels.jsonl", e)
        for c in minicorpus_criteria:
            trial_labels.setdefault(c.trial_id, 0)
        full = keyword_metrics(matches, crit_labels, trial_labels)
        for phrase in default_sets[e].phrases:
            ablated = keyword_metrics(
                matches, crit_labels, trial_labels, ablate_phrase=phrase
            )
            assert ablated.recall <= full.recall


class TestConfig:
    def test_default_sets_cover_all_seven(self, default_sets):
        assert set(default_sets) == set(E)
        for ks in default_sets.values():
            assert ks.phrases
            assert len(set(ks.phrases)) == len(ks.phrases)

    def test_roundtrip_through_file(self, tmp_path, default_sets):
        from trialscreen.keywords import load_keyword_file

        path = tmp_path / "kw.txt"
        lines = []
        for e in E:
            lines.append(f"[{e.value}]")
            lines.extend(default_sets[e].phrases)
        path.write_text("\n".join(lines) + "\n")
        loaded = load_keyword_file(path)
        assert loaded == default_sets
