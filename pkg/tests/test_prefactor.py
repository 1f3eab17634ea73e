import numpy as np
import pytest

from hkprop.prefactor import (
    BranchContinuityError,
    CausticError,
    PrefactorState,
    advance_argument,
    complex_det,
    hk_matrix,
    hk_prefactor,
    update_theta,
)


def harmonic_jacobian(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, s], [-s, c]])


def test_hk_matrix_identity():
    for d in (1, 2, 3):
        z = hk_matrix(np.eye(2 * d))
        assert np.allclose(z, 2.0 * np.eye(d))


def test_hk_matrix_harmonic_rotation():
    for t in (0.3, 1.7, 3.5):
        z = hk_matrix(harmonic_jacobian(t))
        assert z.shape == (1, 1)
        assert z[0, 0] == pytest.approx(2.0 * np.exp(-1j * t))


def test_hk_matrix_free_flight():
    t = 0.8
    w = np.block([[np.eye(2), t * np.eye(2)], [np.zeros((2, 2)), np.eye(2)]])
    z = hk_matrix(w)
    assert np.allclose(z, (2.0 - 1j * t) * np.eye(2))


def test_complex_det_matches_lapack(rng):
    for d in range(1, 7):
        a = rng.standard_normal((50, d, d)) + 1j * rng.standard_normal((50, d, d))
        mine = complex_det(a)
        ref = np.linalg.det(a)
        assert np.max(np.abs(mine - ref) / np.abs(ref)) < 1e-12
    # nearly singular matrices still agree
    a = rng.standard_normal((4, 4))
    a[1] = a[0] * (1 + 1e-12)
    assert complex_det(a) == pytest.approx(np.linalg.det(a), rel=1e-6, abs=1e-12)


def test_theta_constant_determinant():
    st = PrefactorState.initial(1)
    st = update_theta(st, 2.0)
    assert st.theta == 0.0
    assert st.magnitude == 2.0


def test_theta_tracks_harmonic_argument():
    tau = 0.05
    st = PrefactorState.initial(1)
    for k in range(1, 400):
        st = update_theta(st, 2.0 * np.exp(-1j * k * tau))
    assert st.theta == pytest.approx(-399 * tau, abs=1e-10)


def test_theta_continues_through_branch_cut():
    # spiral with increasing argument passes +pi without jumping back
    st = PrefactorState.initial(1)
    st = PrefactorState(det_value=1.0 + 0j, theta=0.0, magnitude=1.0)
    phis = np.arange(1, 30) * 0.3
    for phi in phis:
        st = update_theta(st, np.exp(1j * phi))
    assert st.theta == pytest.approx(phis[-1], abs=1e-12)
    assert st.theta > np.pi  # principal-branch arg would have wrapped


def test_theta_errors():
    st = PrefactorState.initial(1)
    with pytest.raises(CausticError):
        update_theta(st, 0.0)
    with pytest.raises(BranchContinuityError):
        update_theta(st, 2.0 * np.exp(1j * (np.pi - 0.01)))
    theta = np.zeros(3)
    with pytest.raises(CausticError):
        advance_argument(theta, np.ones(3), np.array([1.0, np.nan, 1.0]))


def test_prefactor_values():
    for d in (1, 2, 3):
        assert hk_prefactor(PrefactorState.initial(d), d) == pytest.approx(1.0)
    # harmonic at t=pi: det = 2 e^{-i pi}, theta = -pi -> u = -i
    st = PrefactorState.initial(1)
    for k in range(1, 63):
        st = update_theta(st, 2.0 * np.exp(-1j * k * np.pi / 62))
    u = hk_prefactor(st, 1)
    assert u == pytest.approx(-1j, abs=1e-12)
    # the principal branch would give +i
    assert np.sqrt(complex(st.det_value) / 2.0) == pytest.approx(1j, abs=1e-12)


def test_prefactor_modulus_and_square(rng):
    st = PrefactorState.initial(1)
    for k in range(1, 200):
        st = update_theta(st, 2.0 * np.exp(-1j * k * 0.03))
        u = hk_prefactor(st, 1)
        assert abs(abs(u) - 1.0) < 1e-12
        assert u * u == pytest.approx(0.5 * st.det_value, rel=1e-12)
