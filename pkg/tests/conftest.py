import numpy as np
import pytest

from pwcycles import SystemParams


@pytest.fixture
def params():
    """Unbounded annulus, non-resonant."""
    return SystemParams(1.0, -2.0)


@pytest.fixture
def resonant_params():
    return SystemParams(1.0, -1.0)


@pytest.fixture
def bounded_params():
    """Bounded annulus: r0 = min(1.5, 2.0) = 1.5."""
    return SystemParams(-1.5, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
