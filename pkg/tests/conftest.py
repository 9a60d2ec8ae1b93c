import pytest

from evohj.adaptive import find_ess
from evohj.correctors import corrector_coefficients
from evohj.hj import hj_profile
from evohj.model import ModelParams

ACCEPTANCE_LINES = []


def symmetric(m):
    return ModelParams(r1=3, r2=3, g1=1, g2=1, theta=0.5, kappa1=1, kappa2=1, m1=m, m2=m)


BENCHMARK = ModelParams(r1=2, r2=1.5, g1=1, g2=2, theta=0.5, kappa1=1, kappa2=1, m1=0.5, m2=0.7)
# same as BENCHMARK but with migration strong enough to keep the ESS monomorphic
MONO_ASYM = ModelParams(r1=2, r2=1.5, g1=1, g2=2, theta=0.5, kappa1=1, kappa2=1, m1=1.5, m2=2.0)


@pytest.fixture(scope="session")
def sym_strong():
    return symmetric(2.0)


@pytest.fixture(scope="session")
def sym_weak():
    return symmetric(0.05)


@pytest.fixture(scope="session")
def benchmark_params():
    return BENCHMARK


@pytest.fixture(scope="session")
def mono_asym():
    return MONO_ASYM


@pytest.fixture(scope="session")
def expansion():
    cache = {}

    def get(p):
        if p not in cache:
            ess = find_ess(p)
            hj = hj_profile(ess, p)
            cache[p] = (ess, hj, corrector_coefficients(ess, hj, p))
        return cache[p]

    return get


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
