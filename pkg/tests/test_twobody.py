import numpy as np
import pytest

from faddeev import kinematics
from faddeev.twobody import (MT_SINGLET, MT_TRIPLET, PairPotential, bound_state_basis, eval_potential,
                             potential_range, solve_bound_states, weinberg_states)
from oracles import V1_AT_1FM, V2_AT_1FM

TAU_X = kinematics.tau_factors(kinematics.MassSystem.equal())[0]


@pytest.fixture(scope="module")
def basis():
    return bound_state_basis(60.0, TAU_X, 160)


def test_potential_values_at_one_fermi():
    assert MT_SINGLET(1.0) == pytest.approx(V1_AT_1FM, rel=1e-12)
    assert MT_SINGLET(1.0) == pytest.approx(-44.920, abs=5e-4)
    assert MT_TRIPLET(1.0) == pytest.approx(V2_AT_1FM, rel=1e-12)


def test_potential_in_scaled_coordinate():
    assert eval_potential(MT_TRIPLET, TAU_X * 1.0, TAU_X) == pytest.approx(V2_AT_1FM)


def test_potential_rejects_bad_input():
    with pytest.raises(ValueError):
        PairPotential(((1.0, -1.0),))
    with pytest.raises(ValueError):
        MT_SINGLET(0.0)


def test_deuteron_energy(basis):
    states = solve_bound_states(MT_TRIPLET, 0, basis, TAU_X)
    assert len(states) == 1
    assert states[0].energy == pytest.approx(-2.2306, abs=1e-3)


def test_singlet_has_no_bound_state(basis):
    assert solve_bound_states(MT_SINGLET, 0, basis, TAU_X) == []


def test_bound_state_normalized_with_free_tail(basis):
    d = solve_bound_states(MT_TRIPLET, 0, basis, TAU_X)[0]
    x, w = basis.quadrature(6)
    assert np.sum(w * d(x) ** 2) == pytest.approx(1.0, rel=1e-10)
    far = np.array([d.x_match + 1.0, d.x_match + 2.0])
    assert d.log_derivative(far) == pytest.approx([-d.kappa, -d.kappa])
    assert d(0.5 * d.x_match) > 0


def test_deuteron_matches_shooting_oracle():
    # independent check: adaptive ODE shooting for the sign change of u(x_max)
    from scipy.integrate import solve_ivp
    from scipy.optimize import brentq

    pot = MT_TRIPLET
    b = bound_state_basis(40.0, TAU_X, 200)
    E = solve_bound_states(pot, 0, b, TAU_X)[0].energy

    def miss(e):
        f = lambda x, u: [u[1], (pot(x / TAU_X) - e) * u[0]]
        sol = solve_ivp(f, [1e-6, 40 * TAU_X], [1e-6, 1.0], rtol=1e-10, atol=1e-12)
        return sol.y[0, -1]

    grid = np.linspace(E - 0.05, E + 0.05, 11)
    vals = [miss(e) for e in grid]
    i = next(i for i in range(10) if np.sign(vals[i]) != np.sign(vals[i + 1]))
    assert E == pytest.approx(brentq(miss, grid[i], grid[i + 1], xtol=1e-10), abs=1e-4)


def test_weinberg_state_of_binding_potential_is_its_bound_state(basis):
    d = solve_bound_states(MT_TRIPLET, 0, basis, TAU_X)[0]
    eta, u = weinberg_states(MT_TRIPLET, 0, basis, TAU_X, d.energy, 1)[0]
    assert eta == pytest.approx(1.0, abs=1e-8)
    eta_s, _ = weinberg_states(MT_SINGLET, 0, basis, TAU_X, d.energy, 1)[0]
    assert 0 < eta_s < 1
    with pytest.raises(ValueError):
        weinberg_states(MT_SINGLET, 0, basis, TAU_X, 1.0)


def test_potential_range(basis):
    d = solve_bound_states(MT_TRIPLET, 0, basis, TAU_X)[0]
    assert potential_range(d, 1e-3) > potential_range(d, 1e-1) > 0
    with pytest.raises(ValueError):
        potential_range(d, 0.0)
