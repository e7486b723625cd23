import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mirrorparity.constants import C_LIGHT, HBAR, NUCLEON_MASS
from mirrorparity.errors import InvalidArgumentError
from mirrorparity.feasibility import (
    COLUMNS,
    eta_from_omega,
    log_grid,
    nucleons_for_resolution,
    omega_from_eta,
    photon_energy,
    resolution_curve,
    resolution_point,
)
from mirrorparity.thermal import MirrorParams

# 40-digit mpmath evaluation of the closed forms at eta=0.1, lambda=1e-10 m, 1e9 nucleons
OMEGA_REF = 50143748.4040124139673951810464
RATIO_REF = 2.66205009855682003600315188919e-12
N_AT_1E_13 = 26620500985.5682


def test_frozen_reference_point():
    p = resolution_point(1e9, 1e-10, 0.1)
    assert p.omega_rad_s == pytest.approx(OMEGA_REF, rel=1e-13)
    assert p.resolution_ratio == pytest.approx(RATIO_REF, rel=1e-13)
    assert nucleons_for_resolution(1e-13, 1e-10, 0.1) == pytest.approx(N_AT_1E_13, rel=1e-13)


def test_ratio_is_quantum_over_photon_energy():
    p = resolution_point(3e10, 7e-7, 0.4)
    assert p.resolution_ratio == pytest.approx(HBAR * p.omega_rad_s / photon_energy(7e-7), rel=1e-14)
    assert photon_energy(1e-10) == pytest.approx(1.98644586e-15, rel=1e-8)  # 12.4 keV in joules


def test_eta_round_trip_through_mirror():
    omega = omega_from_eta(0.3, 5e-7, 1e9 * NUCLEON_MASS)
    mirror = MirrorParams(1e9 * NUCLEON_MASS, omega)
    assert 4 * math.pi / 5e-7 * mirror.x_zpf == pytest.approx(0.3, rel=1e-14)
    assert eta_from_omega(omega, 5e-7, 1e9 * NUCLEON_MASS) == pytest.approx(0.3, rel=1e-14)


@settings(max_examples=60, deadline=None)
@given(log_r=st.floats(-16, -6), lam=st.sampled_from([1e-10, 5e-7, 7e-7]), eta=st.floats(0.05, 2.0))
def test_forward_inverse_consistency(log_r, lam, eta):
    r = 10.0 ** log_r
    n = nucleons_for_resolution(r, lam, eta)
    assert resolution_point(n, lam, eta).resolution_ratio == pytest.approx(r, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(n=st.floats(1e3, 1e20), lam=st.floats(1e-11, 1e-5), eta=st.floats(0.01, 3.0))
def test_scaling_laws(n, lam, eta):
    base = resolution_point(n, lam, eta).resolution_ratio
    assert resolution_point(2 * n, lam, eta).resolution_ratio == pytest.approx(base / 2, rel=1e-12)
    assert resolution_point(n, 2 * lam, eta).resolution_ratio == pytest.approx(base / 2, rel=1e-12)
    assert resolution_point(n, lam, 2 * eta).resolution_ratio == pytest.approx(base / 4, rel=1e-12)


def test_log_log_slope_is_minus_one():
    pts = resolution_curve(log_grid(1e6, 1e14, 3), 1e-10, 1.0)
    logs = np.log10([[p.n_nucleons, p.resolution_ratio] for p in pts])
    slope = np.polyfit(logs[:, 0], logs[:, 1], 1)[0]
    assert slope == pytest.approx(-1, abs=1e-12)


def test_xray_mirror_near_a_billion_nucleons():
    # at one part in 1e13 an x-ray photon resolves trap quanta of mirrors with 1e8..1e10 nucleons
    for eta in (0.5, 1.0):
        n = nucleons_for_resolution(1e-13, 1e-10, eta)
        assert 1e8 <= n <= 1e10
    assert 4 * math.pi * HBAR / (NUCLEON_MASS * 1e-10 * C_LIGHT * 1e-13) == pytest.approx(
        nucleons_for_resolution(1e-13, 1e-10, 1.0), rel=1e-15)


def test_curve_validation():
    with pytest.raises(InvalidArgumentError):
        resolution_curve([], 1e-10, 0.1)
    with pytest.raises(InvalidArgumentError):
        resolution_curve([1e9, 1e8], 1e-10, 0.1)
    with pytest.raises(InvalidArgumentError):
        resolution_point(-1, 1e-10, 0.1)
    with pytest.raises(InvalidArgumentError):
        omega_from_eta(0.0, 1e-10, 1.0)


def test_log_grid_endpoints_and_row_layout():
    grid = log_grid(1e6, 1e12, 2)
    assert len(grid) == 13
    assert grid[0] == pytest.approx(1e6) and grid[-1] == pytest.approx(1e12)
    assert len(resolution_point(1e9, 1e-10, 0.1).row()) == len(COLUMNS)
