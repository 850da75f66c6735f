import pytest

from vet.config import default_config


@pytest.fixture
def cfg():
    return default_config()
