import os
import sys

import numpy as np
import pytest
import torch
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from criteria import LINES as ACCEPTANCE_LINES  # noqa: E402
from qgrank.synthetic import random_toy_kb, spain_kb, spain_lexicon  # noqa: E402

torch.set_default_dtype(torch.float64)

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def spain():
    return spain_kb()


@pytest.fixture(scope="session")
def lexicon():
    return spain_lexicon()


@pytest.fixture
def toy_kb():
    return random_toy_kb(np.random.default_rng(7))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
