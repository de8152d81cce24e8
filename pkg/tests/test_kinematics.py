import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faddeev import kinematics
from faddeev.extraction import cm_to_elab, elab_to_cm

masses = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(masses, masses, masses, st.sampled_from([1, 2, 3]))
def test_tau_product_is_twice_three_body_reduced_mass(m1, m2, m3, i):
    ms = kinematics.MassSystem(m1, m2, m3)
    tx, ty = kinematics.tau_factors(ms, i)
    mu3 = kinematics.reduced_masses(ms, i)[2]
    assert tx * ty == pytest.approx(2 * mu3, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(masses, masses, masses, st.sampled_from([(1, 2), (2, 3), (3, 1), (1, 3)]))
def test_rotation_is_orthogonal(m1, m2, m3, ij):
    R = kinematics.rotation_matrix(kinematics.MassSystem(m1, m2, m3), *ij)
    assert np.allclose(R @ R.T, np.eye(2), atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 50), st.floats(0.01, 50), st.floats(-1, 1))
def test_rotation_preserves_hyperradius(x, y, u):
    ms = kinematics.MassSystem.equal()
    xj, yj = kinematics.rotate_arrangement(ms, 1, 2, x, y, u)
    assert np.hypot(xj, yj) == pytest.approx(np.hypot(x, y), rel=1e-12)


def test_equal_mass_rotation_angle_is_sixty_degrees():
    ms = kinematics.MassSystem.equal()
    assert kinematics.rotation_angle(ms, 1, 2) == pytest.approx(np.pi / 3, abs=1e-12)


def test_rotation_matrix_agrees_with_particle_positions():
    rng = np.random.default_rng(1)
    ms = kinematics.MassSystem(1.0, 2.0, 3.5)
    r = rng.normal(size=(3, 3))
    M1 = kinematics._jacobi_matrix(ms, 1)
    M3 = kinematics._jacobi_matrix(ms, 3)
    xy1, xy3 = (M1 @ r)[:2], (M3 @ r)[:2]
    assert np.allclose(kinematics.rotation_matrix(ms, 1, 3) @ xy1, xy3)


def test_polar_round_trip_and_edges():
    rho, alpha = kinematics.polar_from_cart(0.0, 2.0)
    assert (rho, alpha) == (2.0, pytest.approx(np.pi / 2))
    assert kinematics.polar_from_cart(3.0, 0.0) == (3.0, 0.0)
    x, y = kinematics.cart_from_polar(*kinematics.polar_from_cart(1.3, 0.4))
    assert (x, y) == (pytest.approx(1.3), pytest.approx(0.4))


def test_tau_for_equal_masses():
    ms = kinematics.MassSystem.equal()
    tx, ty = kinematics.tau_factors(ms)
    m = 1 / 41.47
    assert tx == pytest.approx(np.sqrt(m))
    assert ty == pytest.approx(np.sqrt(4 * m / 3))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        kinematics.MassSystem(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        kinematics.tau_factors(kinematics.MassSystem.equal(), 4)
    with pytest.raises(ValueError):
        kinematics.rotate_arrangement(kinematics.MassSystem.equal(), 1, 2, 1.0, 1.0, 1.5)


def test_lab_cm_conversion_is_inverse():
    E_d = -2.2306860
    assert cm_to_elab(elab_to_cm(14.1, E_d), E_d) == pytest.approx(14.1)
    assert elab_to_cm(14.1, E_d) == pytest.approx(E_d + 2 / 3 * 14.1)
