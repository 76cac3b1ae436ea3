import numpy as np
import pytest
from hypothesis import settings

from bracketflow.experiments import block_h0, standard_h0
from bracketflow.generators import GeneratorSpec
from bracketflow.integrator import IntegratorConfig, integrate

# `pytest --hypothesis-profile=stress` for a longer property sweep
settings.register_profile("stress", max_examples=1000, deadline=None)
settings.register_profile("default", deadline=None)
settings.load_profile("default")

# filled by test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_symmetric(rng, d, scale=1.0):
    x = rng.uniform(-scale, scale, size=(d, d))
    return 0.5 * (x + x.T)


@pytest.fixture(scope="session")
def h0():
    return standard_h0(5)


@pytest.fixture(scope="session")
def h0_block():
    return block_h0(5)


@pytest.fixture(scope="session")
def brockett_spec():
    return GeneratorSpec.brockett([5, 4, 3, 2, 1])


@pytest.fixture(scope="session")
def brockett_traj(h0, brockett_spec):
    return integrate(brockett_spec, h0, IntegratorConfig())


@pytest.fixture(scope="session")
def toda_traj(h0):
    return integrate(GeneratorSpec.toda(), h0, IntegratorConfig(), with_factors=True)


@pytest.fixture(scope="session")
def wegner_traj(h0):
    return integrate(GeneratorSpec.wegner(), h0, IntegratorConfig(), with_factors=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
