import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rsma_rm.harness import trial_input
from rsma_rm.scenario import default_scenario

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def scenario():
    return default_scenario()


@pytest.fixture(scope="session")
def instance(scenario):
    """Trial 0 of the default scenario: (scenario, channels, stats)."""
    inp = trial_input(scenario, 0)
    return inp.scenario, inp.channels, inp.stats


# (criterion, passed, detail) lines filled in by test_acceptance
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}: {detail}")
