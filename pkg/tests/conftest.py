import pytest

import eqstate as eq


@pytest.fixture(scope="session")
def doubling_map():
    return eq.doubling()


@pytest.fixture(scope="session")
def tent_map():
    return eq.tent(2.0)


@pytest.fixture(scope="session")
def lsv06():
    return eq.lsv(0.6)


@pytest.fixture(scope="session")
def lsv15():
    return eq.lsv(1.5)


@pytest.fixture(scope="session")
def doubling_scheme(doubling_map):
    return eq.first_return_scheme(doubling_map, (0.0, 1.0), 5)


@pytest.fixture(scope="session")
def tent_scheme(tent_map):
    return eq.first_return_scheme(tent_map, (0.0, 1.0), 3)


@pytest.fixture(scope="session")
def lsv06_scheme(lsv06):
    return eq.first_return_scheme(lsv06, (0.5, 1.0), 20)


@pytest.fixture(scope="session")
def lsv15_scheme(lsv15):
    return eq.first_return_scheme(lsv15, (0.5, 1.0), 40)
