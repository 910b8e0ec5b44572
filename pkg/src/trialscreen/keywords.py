"""High-recall keyword filtering of criteria for seven exclusion types.

The keyword lists deliberately over-match (e.g. "nervous" pulls in CNS
metastasis criteria, "hepatitis" feeds both the HBV and HCV streams); the
downstream classifier is responsible for precision. Matching is a single
Aho-Corasick pass over normalized text: lowercase, hyphens treated as
spaces, whitespace runs collapsed, with word boundaries enforced at both
ends of each phrase.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import EmptyKeywordSet, MissingLabel
from .parser import Criterion


class ExclusionType(Enum):
    PRIOR = "Prior"
    HIV = "HIV"
    HBV = "HBV"
    HCV = "HCV"
    PSYCH = "Psych"
    SUBST = "Subst"
    AUTO = "Auto"


@dataclass(frozen=True)
class KeywordSet:
    exclusion: ExclusionType
    phrases: tuple[str, ...]  # lowercase, deduplicated, order-preserving

    def without(self, phrase: str) -> "KeywordSet":
        remaining = tuple(p for p in self.phrases if p != phrase)
        return KeywordSet(self.exclusion, remaining)


@dataclass(frozen=True)
class KeywordMatch:
    criterion_key: tuple[str, int]
    exclusion: ExclusionType
    hits: tuple[tuple[str, tuple[int, int]], ...]  # (phrase, span in tagged_text)

    @property
    def phrases(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for phrase, _span in self.hits:
            seen.setdefault(phrase)
        return tuple(seen)


def normalize(text: str) -> str:
    return normalize_with_map(text)[0]


def normalize_with_map(text: str) -> tuple[str, list[int]]:
    """Lowercase, hyphen->space, collapse whitespace; keep an index map.

    Returns (normalized, idx_map) where idx_map[i] is the position in the
    original text of normalized character i, so match spans can be reported
    against the original string.
    """
    chars: list[str] = []
    idx_map: list[int] = []
    for i, ch in enumerate(text):
        c = ch.lower()
        if len(c) != 1:
            c = ch
        if c == "-" or c.isspace():
            c = " "
        if c == " " and (not chars or chars[-1] == " "):
            continue
        chars.append(c)
        idx_map.append(i)
    return "".join(chars), idx_map


class _Node:
    __slots__ = ("children", "fail", "output")

    def __init__(self) -> None:
        self.children: dict[str, _Node] = {}
        self.fail: "_Node | None" = None
        self.output: list[str] = []


class Matcher:
    """Immutable multi-phrase matcher for one exclusion type.

    Built once from a KeywordSet; safe to share read-only across workers.
    """

    def __init__(self, keyword_set: KeywordSet) -> None:
        if not keyword_set.phrases:
            raise EmptyKeywordSet(f"no phrases for {keyword_set.exclusion.value}")
        self.exclusion = keyword_set.exclusion
        # normalized pattern -> phrase as listed in the config
        self._patterns: dict[str, str] = {}
        for phrase in keyword_set.phrases:
            self._patterns.setdefault(normalize(phrase), phrase)
        self._root = self._build(self._patterns)

    @staticmethod
    def _build(patterns: dict[str, str]) -> _Node:
        root = _Node()
        for pat in patterns:
            node = root
            for ch in pat:
                node = node.children.setdefault(ch, _Node())
            node.output.append(pat)
        root.fail = root
        queue: deque[_Node] = deque()
        for child in root.children.values():
            child.fail = root
            queue.append(child)
        while queue:
            node = queue.popleft()
            for ch, child in node.children.items():
                fail = node.fail
                while fail is not root and ch not in fail.children:
                    fail = fail.fail
                child.fail = fail.children.get(ch, root)
                if child.fail is child:
                    child.fail = root
                child.output.extend(child.fail.output)
                queue.append(child)
        return root

    def search(self, text: str) -> list[tuple[str, tuple[int, int]]]:
        """All word-bounded phrase hits, as (phrase, span in `text`)."""
        norm, idx_map = normalize_with_map(text)
        hits: list[tuple[int, str]] = []
        node = self._root
        for pos, ch in enumerate(norm):
            while node is not self._root and ch not in node.children:
                node = node.fail
            node = node.children.get(ch, self._root)
            for pat in node.output:
                start = pos + 1 - len(pat)
                before_ok = start == 0 or not norm[start - 1].isalnum()
                after_ok = pos + 1 == len(norm) or not norm[pos + 1].isalnum()
                if before_ok and after_ok:
                    hits.append((start, pat))
        hits.sort(key=lambda h: (h[0], len(h[1])))
        out: list[tuple[str, tuple[int, int]]] = []
        for start, pat in hits:
            end = start + len(pat)
            span = (idx_map[start], idx_map[end - 1] + 1)
            out.append((self._patterns[pat], span))
        return out


def compile_keywords(keyword_set: KeywordSet) -> Matcher:
    return Matcher(keyword_set)


def match_criterion(criterion: Criterion, matcher: Matcher) -> KeywordMatch | None:
    hits = matcher.search(criterion.tagged_text)
    if not hits:
        return None
    return KeywordMatch(criterion.key, matcher.exclusion, tuple(hits))


def filter_corpus(
    criteria: list[Criterion],
    exclusion: ExclusionType,
    keyword_sets: dict[ExclusionType, KeywordSet] | None = None,
) -> list[KeywordMatch]:
    """One KeywordMatch per criterion with at least one hit, in corpus order."""
    sets = keyword_sets if keyword_sets is not None else default_keyword_sets()
    matcher = compile_keywords(sets[exclusion])
    out: list[KeywordMatch] = []
    for criterion in criteria:
        m = match_criterion(criterion, matcher)
        if m is not None:
            out.append(m)
    return out


_SECTION_RE = re.compile(r"^\[(?P<name>[^\]]+)\]\s*$")


def load_keyword_file(path: str | Path) -> dict[ExclusionType, KeywordSet]:
    """Parse the plain-text keyword config (one [Section] per exclusion)."""
    return parse_keyword_config(Path(path).read_text(encoding="utf-8"))


def parse_keyword_config(text: str) -> dict[ExclusionType, KeywordSet]:
    by_name = {e.value.lower(): e for e in ExclusionType}
    phrases: dict[ExclusionType, list[str]] = {}
    current: ExclusionType | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group("name").strip().lower()
            if name not in by_name:
                raise EmptyKeywordSet(f"unknown exclusion section [{m.group('name')}]")
            current = by_name[name]
            phrases.setdefault(current, [])
            continue
        if current is None:
            raise EmptyKeywordSet(f"phrase outside any section: {line!r}")
        phrase = line.lower()
        if phrase not in phrases[current]:
            phrases[current].append(phrase)
    out: dict[ExclusionType, KeywordSet] = {}
    for exclusion, plist in phrases.items():
        if not plist:
            raise EmptyKeywordSet(f"empty section [{exclusion.value}]")
        out[exclusion] = KeywordSet(exclusion, tuple(plist))
    return out


def default_keyword_sets() -> dict[ExclusionType, KeywordSet]:
    text = resources.files("trialscreen").joinpath("data/keywords.txt").read_text("utf-8")
    return parse_keyword_config(text)


@dataclass
class KeywordMetrics:
    exclusion: ExclusionType
    precision: float
    recall: float
    accuracy: float
    per_phrase_precision: dict[str, float] = field(default_factory=dict)
    matched_criteria: int = 0
    positive_trials: int = 0


def keyword_metrics(
    matches: list[KeywordMatch],
    criterion_labels: dict[tuple[str, int], int],
    trial_labels: dict[str, int],
    ablate_phrase: str | None = None,
) -> KeywordMetrics:
    """Filter-stage performance against gold labels.

    precision: fraction of matched criteria whose gold label is positive.
    recall: fraction of gold-positive trials having >=1 matched criterion.
    accuracy: fraction of trials where (>=1 match) agrees with the trial label.
    With ablate_phrase set, hits of that phrase are dropped first.
    """
    if ablate_phrase is not None:
        pruned = []
        for m in matches:
            hits = tuple(h for h in m.hits if h[0] != ablate_phrase)
            if hits:
                pruned.append(KeywordMatch(m.criterion_key, m.exclusion, hits))
        matches = pruned

    exclusion = matches[0].exclusion if matches else ExclusionType.PRIOR
    for m in matches:
        if m.criterion_key not in criterion_labels:
            raise MissingLabel(f"no criterion label for {m.criterion_key}")
        if m.criterion_key[0] not in trial_labels:
            raise MissingLabel(f"no trial label for {m.criterion_key[0]}")

    matched_trials = {m.criterion_key[0] for m in matches}
    positives = sum(criterion_labels[m.criterion_key] for m in matches)
    precision = positives / len(matches) if matches else 0.0

    positive_trials = [t for t, lab in trial_labels.items() if lab == 1]
    hit_positive = sum(1 for t in positive_trials if t in matched_trials)
    recall = hit_positive / len(positive_trials) if positive_trials else 0.0

    agree = sum(
        1 for t, lab in trial_labels.items() if int(t in matched_trials) == lab
    )
    accuracy = agree / len(trial_labels) if trial_labels else 0.0

    per_phrase: dict[str, list[int]] = {}
    for m in matches:
        label = criterion_labels[m.criterion_key]
        for phrase in m.phrases:
            per_phrase.setdefault(phrase, []).append(label)
    per_phrase_precision = {
        phrase: sum(labels) / len(labels) for phrase, labels in sorted(per_phrase.items())
    }

    return KeywordMetrics(
        exclusion=exclusion,
        precision=precision,
        recall=recall,
        accuracy=accuracy,
        per_phrase_precision=per_phrase_precision,
        matched_criteria=len(matches),
        positive_trials=len(positive_trials),
    )
