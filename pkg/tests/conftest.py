import numpy as np
import pytest

from fuld import kinetic


@pytest.fixture(scope="session")
def table_a1():
    return kinetic.build_table(1.0, 40.0, 8001)


@pytest.fixture(scope="session")
def table_a2():
    return kinetic.build_table(2.0, 40.0, 8001)


@pytest.fixture(scope="session")
def table_a15():
    # moderate size keeps unit tests quick; acceptance builds larger ones
    return kinetic.build_table(1.5, 40.0, 16001)


@pytest.fixture(scope="session")
def table_a19():
    return kinetic.build_table(1.9, 40.0, 16001)


@pytest.fixture(scope="session")
def table_a05():
    return kinetic.build_table(0.5, 40.0, 16001)


@pytest.fixture
def rng():
    return np.random.default_rng(20240810)
