"""Shared fixtures"""

import pytest

from builders import LedgerBuilder
from src.crypto.group import get_group


@pytest.fixture
def builder():
    return LedgerBuilder()


@pytest.fixture
def toy_group():
    return get_group("toy101")


@pytest.fixture
def production_group():
    return get_group("production")
