from pathlib import Path

import pytest
import requests

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(autouse=True)
def no_network(monkeypatch):
    """Any real HTTP call from a test is a bug."""

    def refuse(*args, **kwargs):
        raise RuntimeError("network access attempted during tests")

    monkeypatch.setattr(requests, "post", refuse)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def corpus_path() -> Path:
    return FIXTURES / "corpus.jsonl"


@pytest.fixture
def corpus(corpus_path):
    from harness import load_corpus

    pairs, _ = load_corpus(corpus_path)
    return pairs


@pytest.fixture
def run_paths():
    return {
        "gpt-4.1": FIXTURES / "runs_gpt-4.1.jsonl",
        "gpt-4.1-mini": FIXTURES / "runs_gpt-4.1-mini.jsonl",
        "gpt-4.1-nano-ft": FIXTURES / "runs_gpt-4.1-nano-ft.jsonl",
    }


@pytest.fixture
def sentence_bundle():
    from prompts import load_bundle

    return load_bundle("1.1")


@pytest.fixture
def document_bundle():
    from prompts import load_bundle

    return load_bundle("1.2")
