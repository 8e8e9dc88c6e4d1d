import math

import numpy as np
import pytest

from tswind import (ControlInput, LAMBDA_CAP, PlantState, TabularAeroMap,
                    TurbineParams, V_FLOOR, ValidationError, aero_forces,
                    centrifugal_stiffness, plant_derivative, rk4_step,
                    tip_speed_ratio, trim_state, RATED_SPEED, RATED_TORQUE)


def constant_map(cq, ct):
    grid = [0.0, 30.0]
    return TabularAeroMap(grid, [0.0, 45.0],
                          np.full((2, 2), cq), np.full((2, 2), ct))


def test_tip_speed_ratio_hand_value(params):
    assert tip_speed_ratio(1.267, 18.0, params) == pytest.approx(4.4345, abs=1e-4)


def test_tip_speed_ratio_zero_speed(params):
    assert tip_speed_ratio(0.0, 18.0, params) == 0.0


def test_tip_speed_ratio_wind_floor(params):
    assert tip_speed_ratio(1.267, 0.0, params) == LAMBDA_CAP
    assert tip_speed_ratio(1.267, V_FLOOR / 2, params) == LAMBDA_CAP


def test_aero_forces_forced_thrust_coefficient(params):
    F_T, _ = aero_forces(18.0, 1.267, 0.0, params, constant_map(0.01, 0.1))
    assert F_T == pytest.approx(2.4745e5, rel=1e-4)


def test_aero_forces_no_wind(params, aeromap):
    assert aero_forces(0.0, 1.267, 5.0, params, aeromap) == (0.0, 0.0)


def test_aero_forces_reproduces_upper_sector_bound(params):
    # T_a/(J_r v) at v=60 with the torque coefficient pinned at its cap
    _, T_a = aero_forces(60.0, 1.267, 0.0, params, constant_map(0.0751, 0.0))
    assert T_a / (params.J_r * 60.0) == pytest.approx(0.0559, rel=2e-3)


def test_aero_forces_signs_and_finiteness(params, aeromap):
    rng = np.random.default_rng(9)
    for _ in range(500):
        v = rng.uniform(V_FLOOR, 60.0)
        omega = rng.uniform(0.0, 2.5)
        beta = rng.uniform(0.0, 45.0)
        F_T, T_a = aero_forces(v, omega, beta, params, aeromap)
        assert np.isfinite(F_T) and np.isfinite(T_a)
        assert F_T >= 0.0
        assert T_a > 0.0  # torque coefficient is clamped strictly positive


def test_centrifugal_stiffness_values(params):
    assert centrifugal_stiffness(0.0, params) == 0.0
    assert centrifugal_stiffness(1.267, params) == pytest.approx(3129.0, rel=1e-3)
    one = centrifugal_stiffness(0.7, params)
    assert centrifugal_stiffness(1.4, params) == pytest.approx(4 * one, rel=1e-12)


def test_centrifugal_stiffness_even_in_speed(params):
    ws = np.linspace(0.0, 3.0, 50)
    vals = [centrifugal_stiffness(w, params) for w in ws]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert centrifugal_stiffness(-1.3, params) == centrifugal_stiffness(1.3, params)


def test_origin_is_equilibrium_without_wind(params, aeromap):
    rate = plant_derivative(PlantState(), ControlInput(0.0, 0.0), 0.0,
                            params, aeromap)
    assert np.all(rate.as_array() == 0.0)


def test_trim_point_is_static(params, aeromap, trim18):
    # the trim solved from the static balance must null the derivative
    rate = plant_derivative(trim18, ControlInput(trim18.beta, RATED_TORQUE),
                            18.0, params, aeromap).as_array()
    assert np.all(np.abs(rate) < 1e-6)


def test_trim_matches_independent_root_find(params, aeromap):
    # independent oracle: brentq on the torque balance + static formulas
    from scipy.optimize import brentq

    lam = 63.0 * RATED_SPEED / 18.0
    target = RATED_TORQUE / (params.torque_factor * 18.0 ** 2)
    beta = brentq(lambda b: aeromap.eval(lam, b)[0] - target, 15.0, 40.0,
                  xtol=1e-12)
    t = trim_state(18.0, RATED_SPEED, RATED_TORQUE, params, aeromap)
    assert t.beta == pytest.approx(beta, abs=1e-9)
    F_T, T_a = aero_forces(18.0, RATED_SPEED, beta, params, aeromap)
    assert t.y_T == pytest.approx(F_T / params.k_T, rel=1e-12)
    assert t.theta_s == pytest.approx(T_a / params.k_s, rel=1e-9)


def test_trim_out_of_range_raises(params, aeromap):
    from tswind import NumericalError

    with pytest.raises(NumericalError):
        trim_state(18.0, RATED_SPEED, RATED_TORQUE, params, aeromap,
                   beta_range=(44.0, 45.0))


def test_shaft_terms_isolated(params):
    # no aero, equal deflection states zero: rotor acceleration is exactly
    # the damped torsion term
    x = PlantState(theta_s=0.01, omega_r=1.0, omega_g=0.8)
    rate = plant_derivative(x, ControlInput(0.0, 0.0), 0.0, params,
                            constant_map(0.0, 0.0))
    expected = -(params.d_s * (1.0 - 0.8) + params.k_s * 0.01) / params.J_r
    assert rate.omega_r == pytest.approx(expected, rel=1e-15)


def test_matrix_form_consistency(params, aeromap):
    """Componentwise equations match an independently assembled
    A x + B u + g(x, v) split on random states."""
    p = params
    A = np.zeros((8, 8))
    A[0, 3] = 1.0
    A[1, 4] = 1.0
    A[2, 5], A[2, 6] = 1.0, -1.0
    A[3, 0] = -p.k_T / p.m_T
    A[3, 1] = p.N * p.k_B / p.m_T
    A[3, 3] = -p.d_T / p.m_T
    A[3, 4] = p.N * p.d_B / p.m_T
    cb = 1.0 / p.m_B + p.N / p.m_T
    A[4, 0] = p.k_T / p.m_T
    A[4, 1] = -cb * p.k_B
    A[4, 3] = p.d_T / p.m_T
    A[4, 4] = -cb * p.d_B
    A[5, 2] = -p.k_s / p.J_r
    A[5, 5] = -p.d_s / p.J_r
    A[5, 6] = p.d_s / p.J_r
    A[6, 2] = p.k_s / p.J_g
    A[6, 5] = p.d_s / p.J_g
    A[6, 6] = -p.d_s / p.J_g
    A[7, 7] = -1.0 / p.tau
    B = np.zeros((8, 2))
    B[7, 0] = 1.0 / p.tau
    B[6, 1] = -1.0 / p.J_g

    def g(x, v):
        out = np.zeros(8)
        kc = centrifugal_stiffness(x[5], p)
        out[3] = p.N / p.m_T * kc * x[1]
        out[4] = -cb * kc * x[1]
        F_T, T_a = aero_forces(v, x[5], x[7], p, aeromap)
        out[4] += F_T / (p.N * p.m_B)
        out[5] += T_a / p.J_r
        return out

    rng = np.random.default_rng(7)
    for _ in range(100):
        x = rng.uniform(-1, 1, 8) * np.array([0.5, 3, 0.01, 0.5, 1, 2, 2, 20])
        x[7] = abs(x[7])
        u = np.array([rng.uniform(0, 25), rng.uniform(0, 5e6)])
        v = rng.uniform(1, 30)
        lhs = plant_derivative(PlantState(*x), ControlInput(*u), v, p,
                               aeromap).as_array()
        rhs = A @ x + B @ u + g(x, v)
        scale = np.max(np.abs(rhs))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


def _mech_energy(x, p):
    q_dot = np.array([x[3], x[4]])
    M = np.array([[p.m_T + p.N * p.m_B, p.N * p.m_B],
                  [p.N * p.m_B, p.N * p.m_B]])
    kin = 0.5 * q_dot @ M @ q_dot + 0.5 * p.J_r * x[5] ** 2 + 0.5 * p.J_g * x[6] ** 2
    pot = 0.5 * p.k_T * x[0] ** 2 + 0.5 * p.N * p.k_B * x[1] ** 2 \
        + 0.5 * p.k_s * x[2] ** 2
    return kin + pot


@pytest.mark.parametrize("x0", [
    # tower/blade ring-down, no rotation
    PlantState(y_T=0.3, y_B=1.0, y_T_dot=0.1, y_B_dot=-0.5),
    # shaft ring-down, no deflection
    PlantState(theta_s=0.004, omega_r=0.5, omega_g=-0.2),
])
def test_energy_decays_without_aero(params, x0):
    dead = constant_map(0.0, 0.0)

    def deriv(t, x):
        return plant_derivative(PlantState(*x), ControlInput(0.0, 0.0), 0.0,
                                params, dead).as_array()

    x = x0.as_array()
    dt = 0.002
    e_prev = _mech_energy(x, params)
    for k in range(int(10.0 / dt)):
        x = rk4_step(deriv, x, k * dt, dt)
        e = _mech_energy(x, params)
        assert e <= e_prev * (1.0 + 1e-12)
        e_prev = e


def test_effective_blade_stiffness_monotone(params):
    ws = np.linspace(-3, 3, 61)
    k_eff = [params.k_B + centrifugal_stiffness(w, params) for w in ws]
    mags = np.abs(ws)
    order = np.argsort(mags)
    sorted_k = np.array(k_eff)[order]
    assert np.all(np.diff(sorted_k) >= -1e-9)


def test_control_input_validation():
    with pytest.raises(ValidationError):
        ControlInput(0.0, -1.0)
    with pytest.raises(ValidationError):
        ControlInput(math.nan, 0.0)


def test_params_validation():
    with pytest.raises(ValidationError):
        TurbineParams(J_r=-1.0)
    with pytest.raises(ValidationError):
        TurbineParams(alpha=-0.1)
    # alpha may be zero (no centrifugal correction)
    assert TurbineParams(alpha=0.0).alpha == 0.0
