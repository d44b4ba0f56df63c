import pytest

from superslow.averaged import derive_averaged
from superslow.fastslow import derive_fastslow


@pytest.fixture(scope="session")
def averaged_model():
    return derive_averaged()


@pytest.fixture(scope="session")
def fastslow_model():
    return derive_fastslow()
