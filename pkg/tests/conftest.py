import random

import pytest

from avatrace.bilinear import BLS12_381_R, setup
from avatrace.scenario import World


def pytest_addoption(parser):
    parser.addoption("--skip-slow", action="store_true", help="skip tests marked slow")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running sweeps")
    config.addinivalue_line("markers", "acceptance: release acceptance criteria")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--skip-slow"):
        skip = pytest.mark.skip(reason="--skip-slow")
        for item in items:
            if "slow" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def toy23():
    return setup(128, "transparent", insecure_toy_group=True, toy_order=23)


@pytest.fixture(scope="session")
def toy1009():
    return setup(128, "transparent", insecure_toy_group=True, toy_order=1009)


@pytest.fixture(scope="session")
def toy255():
    """Transparent group with the BLS12-381 subgroup order, so collisions are negligible."""
    return setup(128, "transparent", insecure_toy_group=True, toy_order=BLS12_381_R)


@pytest.fixture(scope="session")
def prod():
    return setup(128, "production")


@pytest.fixture(params=["toy255", "prod"])
def params(request):
    return request.getfixturevalue(request.param)


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def world(toy255):
    return World.create(toy255, seed=99)


@pytest.fixture
def prod_world(prod):
    return World.create(prod, seed=7)


_acceptance_lines: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
