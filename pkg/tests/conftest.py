import json
from pathlib import Path

import pytest

from trialscreen import keywords
from trialscreen.parser import Criterion, parse_text

FIXTURES = Path(__file__).parent / "fixtures"
EXEMPLARS_DIR = FIXTURES / "exemplars"
REGISTRY_DIR = FIXTURES / "registry"
MINICORPUS_DIR = FIXTURES / "minicorpus"
GOLDEN_REPORT = FIXTURES / "golden_report.json"


def fixture_eligibility(path: Path) -> str:
    body = json.loads(path.read_text())
    return body["protocolSection"]["eligibilityModule"]["eligibilityCriteria"]


def load_fixture_criteria(directory: Path) -> list[Criterion]:
    criteria = []
    for path in sorted(directory.glob("NCT*.json")):
        criteria.extend(parse_text(path.stem, fixture_eligibility(path)))
    return criteria


def load_labels(path: Path, exclusion=None):
    labels = {}
    with open(path) as fh:
        for line in fh:
            obj = json.loads(line)
            if exclusion is not None and obj["exclusion"] != exclusion.value:
                continue
            labels[(obj["trial_id"], obj["ordinal"])] = obj["label"]
    return labels


def load_trial_labels(path: Path, exclusion):
    labels = {}
    with open(path) as fh:
        for line in fh:
            obj = json.loads(line)
            if obj["exclusion"] == exclusion.value:
                labels[obj["trial_id"]] = obj["label"]
    return labels


@pytest.fixture(scope="session")
def exemplar_criteria():
    return load_fixture_criteria(EXEMPLARS_DIR)


@pytest.fixture(scope="session")
def minicorpus_criteria():
    return load_fixture_criteria(MINICORPUS_DIR)


@pytest.fixture(scope="session")
def default_sets():
    return keywords.default_keyword_sets()
