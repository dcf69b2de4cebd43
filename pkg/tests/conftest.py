from pathlib import Path

import pytest

from sophie.config import Config
from sophie.content import load_content, load_lexicons

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

SCRIPTED_LINES = [
    "I'm afraid I have some bad news. The cancer in your lungs has grown"
    " and it has spread to your liver as well.",
    "How much information would you like me to share about what this means"
    " for the path ahead?",
    "I hear that this is a lot to take in. What worries you most about the future?",
]


@pytest.fixture(scope="session")
def cfg():
    return Config()


@pytest.fixture(scope="session")
def content(cfg):
    return load_content(cfg.content_dir)


@pytest.fixture(scope="session")
def lexicons(cfg):
    return load_lexicons(cfg)


@pytest.fixture
def sample_excerpt_path():
    return FIXTURES / "sample_excerpt.json"
