from pathlib import Path

import pytest

from contactpy import (
    StreamId,
    load_rep,
    make_env,
    point,
    uniform,
    zero_or,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def three_site_rep():
    return load_rep(FIXTURES / "three_site.rep")


@pytest.fixture
def stream():
    return StreamId(20240917)


@pytest.fixture
def zero_env():
    return make_env(point(0.0), 7)


@pytest.fixture
def unit_env():
    return make_env(point(1.0), 11)


@pytest.fixture
def fast_env():
    return make_env(point(4.0), 13)


@pytest.fixture
def random_env():
    return make_env(uniform(1.5, 2.5), 3)


@pytest.fixture
def dilute_env():
    return make_env(zero_or(3.0, 0.5), 5)
