"""Fetch trial records from the ClinicalTrials.gov v2 API and cache locally.

The corpus store is one JSON file per trial (<nct_id>.json) plus a manifest,
so a downloaded corpus is diff-friendly and trivially inspectable. Tests and
offline runs are served from recorded raw API response bodies via a
file:// base URL; nothing in the test suite touches the live registry.
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

import requests

from .errors import MissingEligibility, NotFound, TransportError

DEFAULT_BASE_URL = "https://clinicaltrials.gov/api/v2"
BASE_URL_ENV = "TRIALSCREEN_REGISTRY_URL"

# Deterministic timestamp for fixture-backed fetches so repeated runs write
# byte-identical corpus files.
_FIXTURE_TIME = "1970-01-01T00:00:00+00:00"

NCT_ID_RE = re.compile(r"^NCT\d{8}$")


class RecordSource(Enum):
    LIVE_API = "LiveApi"
    FIXTURE = "Fixture"
    MANUAL = "Manual"


@dataclass(frozen=True)
class TrialRecord:
    nct_id: str
    eligibility_text: str
    fetched_at: str  # ISO-8601 UTC
    source: RecordSource

    def to_json(self) -> dict:
        return {
            "nct_id": self.nct_id,
            "eligibility_text": self.eligibility_text,
            "fetched_at": self.fetched_at,
            "source": self.source.value,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TrialRecord":
        return cls(
            nct_id=data["nct_id"],
            eligibility_text=data["eligibility_text"],
            fetched_at=data["fetched_at"],
            source=RecordSource(data["source"]),
        )


@dataclass(frozen=True)
class CorpusManifest:
    trial_ids: tuple[str, ...]
    created_at: str
    description: str = ""

    def __post_init__(self) -> None:
        if len(set(self.trial_ids)) != len(self.trial_ids):
            raise ValueError("manifest contains duplicate trial ids")

    @classmethod
    def create(cls, trial_ids, description: str = "") -> "CorpusManifest":
        return cls(tuple(trial_ids), _utcnow(), description)

    @classmethod
    def load(cls, path: str | Path) -> "CorpusManifest":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(tuple(data["trial_ids"]), data["created_at"], data.get("description", ""))

    def save(self, path: str | Path) -> None:
        payload = {
            "trial_ids": list(self.trial_ids),
            "created_at": self.created_at,
            "description": self.description,
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def valid_nct_id(nct_id: str) -> bool:
    return bool(NCT_ID_RE.match(nct_id))


class CorpusStore:
    """Per-trial JSON files under one directory; single writer per trial id."""

    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, nct_id: str) -> Path:
        return self.directory / f"{nct_id}.json"

    def has(self, nct_id: str) -> bool:
        return self._path(nct_id).exists()

    def save(self, record: TrialRecord) -> Path:
        if not record.eligibility_text:
            raise MissingEligibility(f"{record.nct_id}: refusing to store empty text")
        path = self._path(record.nct_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(record.to_json(), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        os.replace(tmp, path)
        return path

    def load(self, nct_id: str) -> TrialRecord:
        path = self._path(nct_id)
        if not path.exists():
            raise NotFound(f"{nct_id} not in corpus store")
        return TrialRecord.from_json(json.loads(path.read_text(encoding="utf-8")))

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("NCT*.json"))


class TokenBucket:
    """Client-side pacing: n acquisitions take at least n/rate seconds."""

    def __init__(self, rate: float) -> None:
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.interval = 1.0 / rate
        self._lock = threading.Lock()
        self._next_free = time.monotonic() + self.interval

    def acquire(self) -> None:
        with self._lock:
            now = time.monotonic()
            wait = self._next_free - now
            self._next_free = max(self._next_free, now) + self.interval
        if wait > 0:
            time.sleep(wait)


def extract_eligibility_text(study: dict) -> str | None:
    """Pull the eligibility-criteria field out of a v2 study resource."""
    protocol = study.get("protocolSection") or {}
    eligibility = protocol.get("eligibilityModule") or {}
    text = eligibility.get("eligibilityCriteria")
    return text if text else None


class RegistryClient:
    """Fetch trials by NCT id, with caching and polite rate limiting.

    base_url may be the live v2 API, any http(s) endpoint serving the same
    shape (a stub server in tests), or "file:///dir" pointing at a directory
    of recorded raw response bodies named <nct_id>.json.
    """

    def __init__(
        self,
        store: CorpusStore,
        base_url: str | None = None,
        rate_limit: float = 3.0,
        session: requests.Session | None = None,
        timeout: float = 30.0,
    ) -> None:
        self.store = store
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL).rstrip("/")
        self.bucket = TokenBucket(rate_limit)
        self.session = session or requests.Session()
        self.timeout = timeout

    @property
    def _fixture_dir(self) -> Path | None:
        if self.base_url.startswith("file://"):
            return Path(self.base_url[len("file://"):])
        return None

    def _get_study(self, nct_id: str) -> dict:
        fixture_dir = self._fixture_dir
        if fixture_dir is not None:
            path = fixture_dir / f"{nct_id}.json"
            if not path.exists():
                raise NotFound(f"no fixture for {nct_id}")
            try:
                return json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise TransportError(f"bad fixture body for {nct_id}: {exc}") from exc
        url = f"{self.base_url}/studies/{nct_id}"
        try:
            resp = self.session.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"GET {url} failed: {exc}") from exc
        if resp.status_code == 404:
            raise NotFound(f"registry has no study {nct_id}")
        if resp.status_code != 200:
            raise TransportError(f"GET {url} -> HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise TransportError(f"non-JSON body from {url}") from exc

    def fetch_trial(self, nct_id: str, retries: int = 2) -> TrialRecord:
        """Fetch one trial; cached results never re-contact the registry."""
        if not valid_nct_id(nct_id):
            raise NotFound(f"malformed NCT id: {nct_id!r}")
        if self.store.has(nct_id):
            return self.store.load(nct_id)

        attempt = 0
        while True:
            self.bucket.acquire()
            try:
                study = self._get_study(nct_id)
                break
            except TransportError:
                attempt += 1
                if attempt > retries:
                    raise

        text = extract_eligibility_text(study)
        if text is None:
            raise MissingEligibility(f"{nct_id} has no eligibility text")
        is_fixture = self._fixture_dir is not None
        record = TrialRecord(
            nct_id=nct_id,
            eligibility_text=text,
            fetched_at=_FIXTURE_TIME if is_fixture else _utcnow(),
            source=RecordSource.FIXTURE if is_fixture else RecordSource.LIVE_API,
        )
        self.store.save(record)
        return record

    def fetch_batch(
        self, manifest: CorpusManifest
    ) -> tuple[list[TrialRecord], list[tuple[str, Exception]]]:
        """Attempt every manifest id; per-item errors never abort the batch.

        Requests are issued sequentially in manifest order, which trivially
        honors the rate limit and makes output ordering deterministic.
        """
        records: list[TrialRecord] = []
        failures: list[tuple[str, Exception]] = []
        for nct_id in manifest.trial_ids:
            try:
                records.append(self.fetch_trial(nct_id))
            except Exception as exc:  # per-item contract
                failures.append((nct_id, exc))
        return records, failures
