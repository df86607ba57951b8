import numpy as np
import pytest

from prandtl_lab import blasius_reference, make_outer_flow, make_profile


@pytest.fixture(scope="session")
def blasius_ref():
    return blasius_reference(eta_max=14.0, tol=1e-12)


@pytest.fixture(scope="session")
def adverse_flow():
    return make_outer_flow(dpdx=1.0, x0=16.0)


@pytest.fixture(scope="session")
def blend_profile(adverse_flow):
    return make_profile(0.1, adverse_flow, 3.0)


@pytest.fixture(scope="session")
def neutral_flow():
    return make_outer_flow(dpdx=0.0, u_ref=1.0)


def make_tanh_profile(y_max=12.0, n=6001):
    """tanh inflow on a uniform grid; far field 1."""
    from prandtl_lab import WallProfile
    y = np.linspace(0.0, y_max, n)
    return WallProfile.from_samples(y, np.tanh(y), label="tanh")
