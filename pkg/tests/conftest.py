import numpy as np
import pytest

from efglab.games import build_kuhn, build_leduc, build_matching_pennies


@pytest.fixture(scope="session")
def kuhn():
    return build_kuhn()


@pytest.fixture(scope="session")
def leduc():
    return build_leduc()


@pytest.fixture(scope="session")
def pennies():
    return build_matching_pennies()


@pytest.fixture
def rng():
    return np.random.default_rng(7)
