import math

import pytest
from hypothesis import HealthCheck, settings

from ratevol.models import JacobiParams, MarketState, reference_params

settings.register_profile("ratevol", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ratevol")


@pytest.fixture
def cir():
    return reference_params(0.5)


@pytest.fixture
def jacobi():
    return JacobiParams(kappa=0.3, theta=0.8, delta=0.2, gamma=0.2, eta=0.05, rho=0.5)


@pytest.fixture
def cir_state():
    return MarketState(t=0.0, x=math.log(100.0), y=0.05)


@pytest.fixture
def jacobi_state():
    return MarketState(t=0.0, x=math.log(100.0), y=0.5)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
