import pytest

from qsd import MarketParams


@pytest.fixture
def base_params() -> MarketParams:
    """Canonical fixed parameters with kappa_u = 1/zeta."""
    return MarketParams()


@pytest.fixture
def under_provisioned() -> MarketParams:
    """kappa_u = 1/(2*zeta): stable quality above the minimum quality."""
    return MarketParams(kappa_u=1.0 / 0.6)
