"""Split raw eligibility sections into section-tagged individual criteria.

Registry eligibility text is usually organized as "Inclusion Criteria:" /
"Exclusion Criteria:" headers followed by bulleted or numbered lists, but a
fair number of trials ship a single nonspecific blob. Each criterion keeps
a tag naming the section it came from ("inclusion", "exclusion", or
"eligibility" for the nonspecific case) so downstream models see the context.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import EmptyInput


class SectionKind(Enum):
    INCLUSION = "inclusion"
    EXCLUSION = "exclusion"
    ELIGIBILITY = "eligibility"  # nonspecific section only


@dataclass(frozen=True)
class Criterion:
    trial_id: str
    section: SectionKind
    ordinal: int
    text: str

    @property
    def tagged_text(self) -> str:
        return f"{self.section.value}: {self.text}"

    @property
    def key(self) -> tuple[str, int]:
        return (self.trial_id, self.ordinal)


# Line-anchored section headers: optional leading numbering, optional "key",
# optional trailing colon. "Key eligibility criteria" maps to the nonspecific
# kind.
_HEADER_RE = re.compile(
    r"^\s*(?:\d+[.)]\s*)?(?:key\s+)?(inclusion|exclusion|eligibility)\s+criteria\s*:?\s*$",
    re.IGNORECASE,
)

# List-item markers: "-", "*", or "N." / "N)". Unicode bullets are normalized
# to "-" beforehand.
_ITEM_RE = re.compile(r"^\s*(?:[-*]|\d+[.)])\s*")

_BULLET_GLYPHS = "•‣▪●◦⁃·"


def _normalize_bullets(text: str) -> str:
    for glyph in _BULLET_GLYPHS:
        text = text.replace(glyph, "-")
    return text


def detect_sections(eligibility_text: str) -> list[tuple[SectionKind, str]]:
    """Partition eligibility text into (section kind, text block) pairs.

    Header lines open a new block and are consumed; text before any header,
    or a document with no headers at all, becomes one ELIGIBILITY block.
    """
    if not eligibility_text or not eligibility_text.strip():
        raise EmptyInput("eligibility text is empty")

    blocks: list[tuple[SectionKind, list[str]]] = []
    current_kind: SectionKind | None = None
    current_lines: list[str] = []

    def flush() -> None:
        nonlocal current_lines
        text = "\n".join(current_lines).strip("\n").strip()
        if text:
            kind = current_kind if current_kind is not None else SectionKind.ELIGIBILITY
            blocks.append((kind, current_lines))
        current_lines = []

    for line in eligibility_text.split("\n"):
        m = _HEADER_RE.match(line)
        if m:
            flush()
            word = m.group(1).lower()
            current_kind = {
                "inclusion": SectionKind.INCLUSION,
                "exclusion": SectionKind.EXCLUSION,
                "eligibility": SectionKind.ELIGIBILITY,
            }[word]
        else:
            current_lines.append(line)
    flush()

    out: list[tuple[SectionKind, str]] = []
    for kind, lines in blocks:
        text = "\n".join(lines).strip("\n")
        if text.strip():
            out.append((kind, text))
    return out


def split_criteria(block: str, section: SectionKind) -> list[str]:
    """Split one section block into individual criterion strings.

    Splits on list-item markers and blank-line paragraph breaks; continuation
    lines are joined to their item with single spaces; markers are stripped.
    """
    del section  # splitting rules do not depend on the section kind
    block = _normalize_bullets(block)

    items: list[str] = []
    current: list[str] | None = None

    def flush() -> None:
        nonlocal current
        if current is not None:
            text = " ".join(part for part in current if part).strip()
            if text:
                items.append(text)
        current = None

    for line in block.split("\n"):
        stripped = line.strip()
        if not stripped:
            flush()
            continue
        m = _ITEM_RE.match(line)
        if m:
            flush()
            current = [line[m.end():].strip()]
        elif current is None:
            current = [stripped]
        else:
            current.append(stripped)
    flush()
    return items


def parse_text(trial_id: str, eligibility_text: str) -> list[Criterion]:
    """Parse raw eligibility text into ordered, section-tagged criteria."""
    criteria: list[Criterion] = []
    ordinal = 0
    for kind, block in detect_sections(eligibility_text):
        for text in split_criteria(block, kind):
            criteria.append(Criterion(trial_id, kind, ordinal, text))
            ordinal += 1
    return criteria


def parse_trial(record) -> list[Criterion]:
    """Parse a stored TrialRecord (anything with nct_id and eligibility_text)."""
    return parse_text(record.nct_id, record.eligibility_text)


def token_count(text: str) -> int:
    return len(text.split())


def corpus_stats(criteria: list[Criterion]) -> dict:
    """Summary statistics over a parsed corpus; token = whitespace chunk."""
    per_section = {kind.value: 0 for kind in SectionKind}
    lengths: list[int] = []
    over_limit: list[tuple[str, int]] = []
    for c in criteria:
        per_section[c.section.value] += 1
        n = token_count(c.tagged_text)
        lengths.append(n)
        if n > 512:
            over_limit.append(c.key)
    return {
        "criterion_count": len(criteria),
        "max_tokens": max(lengths) if lengths else 0,
        "mean_tokens": (sum(lengths) / len(lengths)) if lengths else 0.0,
        "per_section": per_section,
        "over_512_tokens": over_limit,
    }
