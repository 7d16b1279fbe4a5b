from __future__ import annotations

from pathlib import Path

import pytest

from sumcite.corpus import load_dataset

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            if "test_acceptance.py" in getattr(report, "nodeid", ""):
                lines.append((report.nodeid.split("::")[-1], label))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, label in sorted(lines):
            terminalreporter.write_line(f"{label}  {name}")


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return FIXTURES / "corpus"


@pytest.fixture(scope="session")
def corpus(corpus_dir):
    return load_dataset(corpus_dir)


@pytest.fixture(scope="session")
def articles(corpus):
    return corpus[0]


@pytest.fixture(scope="session")
def instances(corpus):
    return corpus[1]


@pytest.fixture(scope="session")
def articles_by_pmid(articles):
    return {a.pmid: a for a in articles}
