import math

import pytest

from tpspeckle import CrystalParams, EntangledState, PumpParams, SymmetrizedState


@pytest.fixture(scope="session")
def crystal():
    # eta_minus = 1, eta_plus = 2: dimensionless maps are t = tau, s = 2*sigma, w = Omega
    return CrystalParams(nu_o=1.5, nu_e=0.5)


@pytest.fixture(scope="session")
def pump_s2():
    return PumpParams(omega_bar=100.0, sigma=1.0)  # s = sigma*eta_plus = 2


@pytest.fixture(scope="session")
def entangled_s2(pump_s2, crystal):
    return EntangledState(pump_s2, crystal)


@pytest.fixture(scope="session")
def antisymmetric_s2(pump_s2, crystal):
    return SymmetrizedState(pump_s2, crystal, theta=math.pi)
