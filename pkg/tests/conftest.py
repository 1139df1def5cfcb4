import pytest

from mobiliscope.pipeline import default_emission_table, default_zones
from mobiliscope.simulator import builtin_transit_dataset, corpus


@pytest.fixture(scope="session")
def transit():
    return builtin_transit_dataset()


@pytest.fixture(scope="session")
def emissions():
    return default_emission_table()


@pytest.fixture(scope="session")
def zones():
    return default_zones()


@pytest.fixture(scope="session")
def fixture_corpus(transit):
    return corpus(data=transit)
