import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vdwtransmon.errors import DomainError
from vdwtransmon.readout import (
    CavityParams,
    CouplingParams,
    cavity_frequency,
    cavity_pull_vs_flux,
    dispersive_shift_transmon,
    dispersive_shift_two_level,
    s21_lorentzian,
)

CAV = CavityParams(6.9073e9, 290e3)
DEVICE = CouplingParams(40.3e6, 1.6258e9)


def test_two_level_shift():
    assert dispersive_shift_two_level(DEVICE) == pytest.approx(0.99895e6, rel=1e-5)


def test_two_level_scalings():
    chi = dispersive_shift_two_level(DEVICE)
    assert dispersive_shift_two_level(CouplingParams(2 * DEVICE.g, DEVICE.delta)) == pytest.approx(4 * chi, rel=1e-15)
    assert dispersive_shift_two_level(CouplingParams(DEVICE.g, -DEVICE.delta)) == -chi


def test_resonant_rejected():
    with pytest.warns(UserWarning):
        cpl = CouplingParams(40e6, 0.0)
    with pytest.raises(DomainError):
        dispersive_shift_two_level(cpl)


def test_transmon_shift():
    assert dispersive_shift_transmon(DEVICE, -131e6) == pytest.approx(-0.0875e6, rel=1e-3)


def test_transmon_shift_identity_at_half_detuning():
    chi2 = dispersive_shift_two_level(DEVICE)
    assert dispersive_shift_transmon(DEVICE, -DEVICE.delta / 2) == pytest.approx(-chi2, rel=1e-14)


def test_transmon_shift_two_level_limit():
    chi2 = dispersive_shift_two_level(DEVICE)
    chi = dispersive_shift_transmon(DEVICE, -1e6 * DEVICE.delta)
    assert abs(abs(chi) - chi2) / chi2 < 1e-5


def test_straddling_pole():
    with pytest.raises(DomainError):
        dispersive_shift_transmon(DEVICE, -DEVICE.delta)


def test_cavity_pull_device():
    f = cavity_pull_vs_flux(CAV, 40.3e6, 5.2815e9)
    assert f == pytest.approx(6.9073e9 + 0.99895e6, abs=10.0)
    assert f - CAV.f_bare == pytest.approx(dispersive_shift_two_level(DEVICE), rel=1e-9)


def test_cavity_pull_decoupled():
    assert cavity_pull_vs_flux(CAV, 0.0, 5.2815e9) == CAV.f_bare


def test_cavity_pull_monotone():
    f01 = np.linspace(4.0e9, 6.5e9, 30)
    pulls = [cavity_pull_vs_flux(CAV, 40.3e6, f) - CAV.f_bare for f in f01]
    assert np.all(np.diff(pulls) > 0)


def test_cavity_pull_resonant():
    with pytest.raises(DomainError):
        cavity_pull_vs_flux(CAV, 40.3e6, CAV.f_bare)


def test_power_regimes():
    assert cavity_frequency(CAV, 40.3e6, 5.2815e9, high_power=True) == CAV.f_bare
    assert cavity_frequency(CAV, 40.3e6, 5.2815e9, high_power=False) > CAV.f_bare


def test_lorentzian_points():
    f0 = CAV.f_bare
    assert s21_lorentzian(CAV, f0) == 1.0
    assert s21_lorentzian(CAV, f0 + CAV.kappa / 2) == pytest.approx(0.5, rel=1e-12)
    assert s21_lorentzian(CAV, f0 - CAV.kappa / 2) == pytest.approx(0.5, rel=1e-12)
    assert s21_lorentzian(CAV, f0 + 290e3) == pytest.approx(0.2, rel=1e-12)


@given(st.floats(0, 1e8))
def test_lorentzian_symmetry(x):
    assert s21_lorentzian(CAV, CAV.f_bare + x) == pytest.approx(s21_lorentzian(CAV, CAV.f_bare - x), rel=1e-9)


def test_lorentzian_array():
    out = s21_lorentzian(CAV, np.array([CAV.f_bare, CAV.f_bare + 1e9]))
    assert out.shape == (2,) and out[0] == 1.0 and 0 < out[1] < 1e-6


def test_param_warnings():
    with pytest.warns(UserWarning):
        CavityParams(1e9, 2e6)
    with pytest.warns(UserWarning):
        CouplingParams(40e6, 300e6)
    with pytest.raises(DomainError):
        CavityParams(1e9, 0.0)
