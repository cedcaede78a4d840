import pytest

from utils.qi_core import ScenarioParams


@pytest.fixture
def band_params() -> ScenarioParams:
    """Desk-scale point where mean replacement and the exact sums are compared."""
    return ScenarioParams(kappa=0.01, n_b=1.0, m=200.0)


@pytest.fixture
def brute_params() -> ScenarioParams:
    return ScenarioParams(kappa=0.1, n_b=0.2, m=2.0)
