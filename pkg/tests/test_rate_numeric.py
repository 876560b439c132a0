import math

import numpy as np
import pytest

from tpspeckle import (
    CoherentState,
    CrystalParams,
    EntangledState,
    FockState,
    FrequencyGrid,
    GridTooNarrowError,
    ModelI,
    ModelII,
    PumpParams,
    QuadratureNotConvergedError,
    SymmetrizedState,
    compute_rate_curve,
    rate_coherent_modelI,
    rate_entangled,
    rate_entangled_modelI,
    rate_fock_modelI,
    rate_numeric,
    rate_theta_modelI,
)

CRYSTAL = CrystalParams(nu_o=1.5, nu_e=0.5)  # eta- = 1, eta+ = 2
M_I = ModelI(omega_corr=1.0)


def _ent(s):
    return EntangledState(PumpParams(100.0, s / 2.0), CRYSTAL)


def test_entangled_quadrature_matches_closed_form():
    for (t, s, w) in ((0.0, 2.0, 1.0), (0.7, 0.5, 3.0), (1.6, 4.0, 0.3)):
        res = rate_numeric(_ent(s), ModelI(omega_corr=w), tau=t)
        closed = rate_entangled_modelI(t, s, w)
        assert res.value == pytest.approx(closed, abs=1e-6)
        assert abs(res.value - closed) <= max(1e-6, res.error)


def test_fock_quadrature_matches_closed_form():
    state = FockState(omega_bar=100.0, delta=1.0)
    for (t, w) in ((1.0, 1.0), (0.0, 0.3), (2.0, 3.0)):
        res = rate_numeric(state, ModelI(omega_corr=w), tau=t)
        assert res.value == pytest.approx(rate_fock_modelI(t, w), abs=1e-6)


def test_coherent_quadrature_matches_closed_form():
    state = CoherentState(omega_bar=100.0, delta=1.0)
    for (t, w) in ((0.0, 1.0), (1.0, 0.3), (3.0, 3.0)):
        res = rate_numeric(state, ModelI(omega_corr=w), tau=t)
        assert res.value == pytest.approx(rate_coherent_modelI(t, w), abs=1e-6)


def test_coherent_strong_correlation_peak():
    # Omega >> Delta: R(0) -> 4 (the Model I kernel approaches it as 1/w)
    state = CoherentState(omega_bar=100.0, delta=1.0)
    res = rate_numeric(state, ModelI(omega_corr=2e4), tau=0.0)
    assert res.value == pytest.approx(4.0, abs=1e-3)


def test_entangled_flat_correlation_doubles():
    # |C|^2 ~ 1 over the whole grid, sigma small: R(0) -> 2.  The sinc
    # exchange tail beyond the grid is supplied analytically.
    state = _ent(0.05)
    res = rate_numeric(state, ModelI(omega_corr=1e9), tau=0.0, points=2049)
    assert res.value == pytest.approx(2.0, abs=1e-3)


@pytest.mark.parametrize("theta", [0.0, 1.0, math.pi / 2, math.pi])
def test_symmetrized_quadrature_matches_closed_form(theta):
    state = SymmetrizedState(PumpParams(100.0, 1.0), CRYSTAL, theta)
    for (t, w) in ((0.0, 1.0), (0.8, 0.5)):
        res = rate_numeric(state, ModelI(omega_corr=w), tau=t)
        closed = rate_theta_modelI(t, 2.0, w, theta)
        assert res.value == pytest.approx(closed, abs=1e-6)


def test_model_ii_quadrature_matches_reduced():
    state = _ent(2.0)
    for (t, w) in ((0.5, 0.5), (0.0, 1.0)):
        res = rate_numeric(state, ModelII(omega_th=w), tau=t, points=2049, tolerance=1e-4)
        reduced = rate_entangled(t, 2.0, w, kind="II")
        assert res.value == pytest.approx(reduced, abs=1e-5)


def test_parity_in_tau():
    state = _ent(1.0)
    a = rate_numeric(state, M_I, tau=0.8).value
    b = rate_numeric(state, M_I, tau=-0.8).value
    assert a == pytest.approx(b, abs=1e-9)


def test_error_estimate_reported():
    res = rate_numeric(FockState(100.0, 1.0), M_I, tau=0.5)
    assert res.error >= 0.0
    assert res.value == pytest.approx(rate_fock_modelI(0.5, 1.0), abs=max(1e-6, res.error))


def test_quadrature_not_converged_error():
    with pytest.raises(QuadratureNotConvergedError):
        rate_numeric(FockState(100.0, 1.0), M_I, tau=0.5, points=33, tolerance=1e-9)


def test_grid_too_narrow_error():
    # explicit grid far narrower than the state support
    state = FockState(100.0, 1.0)
    with pytest.raises(GridTooNarrowError):
        rate_numeric(state, M_I, tau=0.0, grid=FrequencyGrid(100.0, 1.0, 257))


def test_explicit_grid_path():
    state = FockState(100.0, 1.0)
    res = rate_numeric(state, M_I, tau=1.0, grid=FrequencyGrid(100.0, 10.0, 1025))
    assert res.value == pytest.approx(rate_fock_modelI(1.0, 1.0), abs=1e-6)


def test_quadrature_curve(entangled_s2):
    taus = np.linspace(0.0, 1.0, 3)
    curve = compute_rate_curve(entangled_s2, M_I, taus, method="quadrature")
    for tau, r in zip(curve.taus, curve.rs):
        assert r == pytest.approx(rate_entangled_modelI(tau, 2.0, 1.0), abs=1e-6)
