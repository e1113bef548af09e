""" Global pytest configuration and fixtures.

The toy instance used throughout: words of length 3 over {0, 1} with at
least one 1. The label is 1 for odd parity and 2 for even parity, the cost
is the word read as a binary number.
"""

import os
import pytest
import pandas as pd
from lqci import automata, core, exact_scheme

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")


@pytest.fixture(scope="session", autouse=True)
def test_setup():
    pd.options.display.max_columns = 10
    pd.options.display.max_rows = 100


@pytest.fixture(scope="session")
def data_dir():
    yield DATA_DIR


@pytest.fixture(scope="session")
def toy_hard():
    yield automata.Dfa(("0", "1"), 2, ((0, 1), (1, 1)), 0, frozenset([1]))


@pytest.fixture(scope="session")
def toy_label():
    parity = automata.Dfa(("0", "1"), 2, ((0, 1), (1, 0)), 0, frozenset([0, 1]))
    yield automata.StateOutputDfa(parity, (2, 1))


@pytest.fixture(scope="session")
def toy_cost():
    # Binary trie over 3 bits; leaf 7 + v outputs v.
    rows = [(2 * q + 1, 2 * q + 2) for q in range(7)] + [(15, 15)] * 9
    trie = automata.Dfa(("0", "1"), 16, tuple(rows), 0, frozenset(range(16)))
    yield automata.StateOutputDfa(trie, (0,) * 7 + tuple(range(8)) + (0,))


@pytest.fixture(scope="session")
def toy_instance(toy_hard, toy_label, toy_cost):
    yield core.LqciInstance(
        alphabet=("0", "1"),
        m=3,
        n=3,
        hard=toy_hard,
        cost=toy_cost,
        label=toy_label,
        labels=(1, 2),
        c="129/50",
        lam="1/5",
        rho=1,
        alpha="1/10",
        beta="1/2",
    )


@pytest.fixture(scope="session")
def toy_table(toy_instance):
    yield exact_scheme.table_for(toy_instance, workers=1)


# ------------------------------------------------------------------------------
# Pytest configuration
# ------------------------------------------------------------------------------


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="Run long running tests",
    )


def modify_slow(config, items):
    option = "runslow"
    if config.getoption(f"--{option}"):
        return

    skipped = pytest.mark.skip(reason=f"need --{option} option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skipped)


def pytest_collection_modifyitems(config, items):
    modify_slow(config, items)
