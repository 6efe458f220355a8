import pytest

from sosbench.cli import load_signature
from sosbench.syntax import parse_term


@pytest.fixture(scope="session")
def sr():
    return load_signature("shiftreset.sig")


@pytest.fixture(scope="session")
def pcf():
    return load_signature("pcf.sig")


@pytest.fixture(scope="session")
def P(sr):
    return lambda text, ctx=(): parse_term(sr, text, ctx)
