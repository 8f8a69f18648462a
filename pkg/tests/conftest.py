from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from conservative_bandits.config import load_instance

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def experiment_instance():
    return load_instance(CONFIG_DIR / "experiment.yaml")


@pytest.fixture(scope="session")
def bf_instance():
    return load_instance(CONFIG_DIR / "bandit_feedback.yaml")


@pytest.fixture(scope="session")
def upper_bound_instance():
    return load_instance(CONFIG_DIR / "upper_bound.yaml")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
