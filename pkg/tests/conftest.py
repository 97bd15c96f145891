from pathlib import Path

import pytest

from capgen.corpus import load_corpus

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def corpus():
    return load_corpus(REPO_ROOT / "corpus")


@pytest.fixture(scope="session")
def fixtures_dir():
    return REPO_ROOT / "fixtures"


@pytest.fixture(scope="session")
def study_config_path():
    return REPO_ROOT / "config" / "study.json"
