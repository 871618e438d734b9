import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from agetb import io
from agetb.model import initial_state, preset

settings.register_profile("agetb", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("agetb")


@pytest.fixture(scope="session")
def varying():
    return preset("varying_n")


@pytest.fixture(scope="session")
def constant():
    return preset("constant_n")


@pytest.fixture(scope="session")
def y0():
    return initial_state()


@pytest.fixture(scope="session")
def cases():
    return io.load_case_series()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance verdict lines ------------------------------------------------------

VERDICTS: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(VERDICTS, key=lambda k: (len(k), k)):
            terminalreporter.write_line(VERDICTS[key])
