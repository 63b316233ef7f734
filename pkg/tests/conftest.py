import pytest

from contact_nozzle.driver import IterationConfig, solve
from contact_nozzle.gas import GasParams
from contact_nozzle.geometry import CutDomain
from contact_nozzle.inlet import build_profiles


@pytest.fixture
def gas():
    """Example gas: gamma 1.4, rho+ 1, rho- 2, p0 1, u0 0.5."""
    return GasParams(1.4, 1.0, 2.0, 1.0, 0.5)


@pytest.fixture(scope="session")
def ladder():
    """Converged sigma = 0.01 runs on L = 20 at 128x32, 256x64 and 512x128."""
    P = GasParams(1.4, 1.0, 2.0, 1.0, 0.5)
    prof = build_profiles(1.0, a_S=0.01, a_v=0.01)
    cfg = IterationConfig(1e-10, 1e-10, 1e-10)
    return [solve(P, prof, CutDomain(20.0, n, n // 4), cfg) for n in (128, 256, 512)]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
