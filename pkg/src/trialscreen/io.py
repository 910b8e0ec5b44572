"""JSON-lines readers/writers for the pipeline's file formats.

Formats (one object per line):
  criteria:    {trial_id, section, ordinal, text, tagged_text}
  matches:     {trial_id, ordinal, exclusion, phrases, spans}
  labels:      {trial_id, ordinal, exclusion, label, annotator}
  predictions: {trial_id, ordinal, exclusion, score, label}
"""

from __future__ import annotations

import json
from pathlib import Path

from .classifier import Prediction
from .keywords import ExclusionType, KeywordMatch
from .parser import Criterion, SectionKind


class SchemaError(ValueError):
    """A JSONL line violated the expected schema; carries the line number."""

    def __init__(self, path, line_no: int, message: str) -> None:
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


def _iter_jsonl(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(path, line_no, f"invalid JSON: {exc}") from exc


def _write_jsonl(path: str | Path, rows) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def write_criteria(path: str | Path, criteria: list[Criterion]) -> int:
    return _write_jsonl(
        path,
        (
            {
                "trial_id": c.trial_id,
                "section": c.section.value,
                "ordinal": c.ordinal,
                "text": c.text,
                "tagged_text": c.tagged_text,
            }
            for c in criteria
        ),
    )


def read_criteria(path: str | Path) -> list[Criterion]:
    out: list[Criterion] = []
    for line_no, obj in _iter_jsonl(path):
        try:
            out.append(
                Criterion(
                    trial_id=obj["trial_id"],
                    section=SectionKind(obj["section"]),
                    ordinal=int(obj["ordinal"]),
                    text=obj["text"],
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(path, line_no, f"bad criterion record: {exc}") from exc
    return out


def write_matches(path: str | Path, matches: list[KeywordMatch]) -> int:
    return _write_jsonl(
        path,
        (
            {
                "trial_id": m.criterion_key[0],
                "ordinal": m.criterion_key[1],
                "exclusion": m.exclusion.value,
                "phrases": list(m.phrases),
                "spans": [{"phrase": p, "start": s[0], "end": s[1]} for p, s in m.hits],
            }
            for m in matches
        ),
    )


def read_matches(path: str | Path) -> list[KeywordMatch]:
    out: list[KeywordMatch] = []
    for line_no, obj in _iter_jsonl(path):
        try:
            hits = tuple(
                (h["phrase"], (int(h["start"]), int(h["end"]))) for h in obj["spans"]
            )
            out.append(
                KeywordMatch(
                    (obj["trial_id"], int(obj["ordinal"])),
                    ExclusionType(obj["exclusion"]),
                    hits,
                )
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(path, line_no, f"bad match record: {exc}") from exc
    return out


def read_labels(
    path: str | Path, exclusion: ExclusionType | None = None
) -> dict[tuple[str, int], int]:
    """Labels keyed by (trial_id, ordinal), optionally for one exclusion.

    Conflicting duplicate labels for the same key are a schema error.
    """
    out: dict[tuple[str, int], int] = {}
    for line_no, obj in _iter_jsonl(path):
        try:
            excl = ExclusionType(obj["exclusion"])
            key = (obj["trial_id"], int(obj["ordinal"]))
            label = int(obj["label"])
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(path, line_no, f"bad label record: {exc}") from exc
        if label not in (0, 1):
            raise SchemaError(path, line_no, f"label must be 0 or 1, got {label}")
        if exclusion is not None and excl is not exclusion:
            continue
        if key in out and out[key] != label:
            raise SchemaError(path, line_no, f"conflicting labels for {key}")
        out[key] = label
    return out


def read_trial_labels(path: str | Path, exclusion: ExclusionType) -> dict[str, int]:
    """Optional trial-level gold overrides: {trial_id, exclusion, label}."""
    out: dict[str, int] = {}
    for line_no, obj in _iter_jsonl(path):
        try:
            excl = ExclusionType(obj["exclusion"])
            trial = obj["trial_id"]
            label = int(obj["label"])
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(path, line_no, f"bad trial label record: {exc}") from exc
        if excl is exclusion:
            out[trial] = label
    return out


def write_predictions(path: str | Path, predictions: list[Prediction]) -> int:
    return _write_jsonl(
        path,
        (
            {
                "trial_id": p.criterion_key[0] if p.criterion_key else None,
                "ordinal": p.criterion_key[1] if p.criterion_key else None,
                "exclusion": p.exclusion.value if p.exclusion else None,
                "score": round(p.score, 10),
                "label": p.label,
            }
            for p in predictions
        ),
    )
