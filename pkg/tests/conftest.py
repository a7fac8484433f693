import numpy as np
import pytest

from localrules.datasets import GERMAN_CSV, GERMAN_SCHEMA, TWO_D_CSV, TWO_D_SCHEMA
from localrules.harness import reference_setup

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def german():
    """Imputed german data split 80/20 with the default 100-tree ensemble."""
    return reference_setup(GERMAN_CSV, GERMAN_SCHEMA, trees=100, seed=0)


@pytest.fixture(scope="session")
def two_d():
    return reference_setup(TWO_D_CSV, TWO_D_SCHEMA, trees=100, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
