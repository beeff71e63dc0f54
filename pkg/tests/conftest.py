"""Shared fixtures: bundled corpus programs and one cached full corpus run."""

from __future__ import annotations

import time
from pathlib import Path

import pytest

from fep.lang import parse
from fep.pipeline import AnalysisConfig, CorpusManifest, bundled_manifest_path, load_program, run_corpus

CORPUS = bundled_manifest_path().parent


def program(name: str):
    return load_program(CORPUS / name)


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def manifest() -> CorpusManifest:
    return CorpusManifest.load(bundled_manifest_path())


@pytest.fixture(scope="session")
def corpus_run(manifest):
    """Full corpus run (cases and mutants) at seed 42, with its wall time."""
    start = time.monotonic()
    result = run_corpus(manifest, AnalysisConfig(seed=42), jobs=1)
    return result, time.monotonic() - start


@pytest.fixture
def src():
    """Parse MiniLang source text."""
    return parse


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
