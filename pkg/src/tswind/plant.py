"""Reduced-order nonlinear turbine plant.

Four mechanical degrees of freedom (tower top fore-aft, blade tip flap,
shaft torsion, rotor/generator rotation) plus a first-order pitch actuator:
8 states in total.  Aerodynamic thrust and torque enter through the aero
coefficient surfaces; the blade spring is stiffened by a centrifugal term.
All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .params import LAMBDA_CAP, TurbineParams, V_FLOOR


@dataclass(frozen=True)
class PlantState:
    """State vector: deflections [m], rates [m/s, rad/s], pitch [deg]."""

    y_T: float = 0.0        # tower top fore-aft deflection
    y_B: float = 0.0        # blade tip flap deflection
    theta_s: float = 0.0    # shaft torsion angle [rad]
    y_T_dot: float = 0.0
    y_B_dot: float = 0.0
    omega_r: float = 0.0    # rotor speed [rad/s]
    omega_g: float = 0.0    # generator speed [rad/s]
    beta: float = 0.0       # actual pitch angle [deg]

    def as_array(self) -> np.ndarray:
        return np.array([self.y_T, self.y_B, self.theta_s, self.y_T_dot,
                         self.y_B_dot, self.omega_r, self.omega_g, self.beta])

    @classmethod
    def from_array(cls, arr) -> "PlantState":
        return cls(*(float(v) for v in arr))


@dataclass(frozen=True)
class ControlInput:
    """Demanded pitch angle [deg] and applied generator torque [Nm]."""

    beta_d: float
    T_g: float

    def __post_init__(self):
        if not (math.isfinite(self.beta_d) and math.isfinite(self.T_g)):
            raise ValidationError("control inputs must be finite")
        if self.T_g < 0:
            raise ValidationError("generator torque must be >= 0")


def tip_speed_ratio(omega_r: float, v: float, params: TurbineParams) -> float:
    """R * omega_r / v, with the division floor rule.

    Below V_FLOOR the ratio is undefined in any useful sense and the
    documented cap LAMBDA_CAP is returned instead; aero forces are zeroed
    there anyway.
    """
    if v < V_FLOOR:
        return LAMBDA_CAP
    return params.R * omega_r / v


def aero_forces(v: float, omega_r: float, beta: float,
                params: TurbineParams, aeromap) -> tuple[float, float]:
    """Rotor thrust F_T [N] and aerodynamic torque T_a [Nm].

    F_T = 0.5 rho pi R^2 C_T v^2 and T_a = 0.5 rho pi R^3 C_Q v^2; both are
    zero below the wind floor.
    """
    if v < V_FLOOR:
        return 0.0, 0.0
    lam = params.R * omega_r / v
    cq, ct = aeromap.eval(lam, beta)
    v2 = v * v
    return params.thrust_factor * ct * v2, params.torque_factor * cq * v2


def centrifugal_stiffness(omega_r: float, params: TurbineParams) -> float:
    """Stiffness added to the blade spring by rotation: alpha m_B r_B w^2."""
    return params.alpha * params.m_B * params.r_B * omega_r * omega_r


def plant_derivative(x: PlantState, u: ControlInput, v: float,
                     params: TurbineParams, aeromap) -> PlantState:
    """Time derivative of the plant state.

    The centrifugal term enters by replacing k_B with the effective blade
    stiffness in both deflection equations.
    """
    p = params
    F_T, T_a = aero_forces(v, x.omega_r, x.beta, p, aeromap)
    k_B_eff = p.k_B + centrifugal_stiffness(x.omega_r, p)

    shaft = p.d_s * (x.omega_r - x.omega_g) + p.k_s * x.theta_s

    d_y_T_dot = (-p.k_T * x.y_T + p.N * k_B_eff * x.y_B
                 - p.d_T * x.y_T_dot + p.N * p.d_B * x.y_B_dot) / p.m_T
    blade_coef = 1.0 / p.m_B + p.N / p.m_T
    d_y_B_dot = (p.k_T / p.m_T * x.y_T - blade_coef * k_B_eff * x.y_B
                 + p.d_T / p.m_T * x.y_T_dot - blade_coef * p.d_B * x.y_B_dot
                 + F_T / (p.N * p.m_B))

    return PlantState(
        y_T=x.y_T_dot,
        y_B=x.y_B_dot,
        theta_s=x.omega_r - x.omega_g,
        y_T_dot=d_y_T_dot,
        y_B_dot=d_y_B_dot,
        omega_r=(-shaft + T_a) / p.J_r,
        omega_g=(shaft - u.T_g) / p.J_g,
        beta=(u.beta_d - x.beta) / p.tau,
    )


def trim_state(v: float, omega: float, T_g: float, params: TurbineParams,
               aeromap, beta_range: tuple[float, float] = (0.0, 45.0),
               tol: float = 1e-12) -> PlantState:
    """Static operating point at constant wind v and rotor speed omega.

    Solves C_Q(lambda, beta) * torque_factor * v^2 = T_g for the pitch by
    bisection on the sign of the torque excess (surplus torque at the low
    end of ``beta_range``, deficit at the high end required), then fills
    in the static deflections.  Raises NumericalError when no pitch in
    ``beta_range`` balances the torque.
    """
    lam = tip_speed_ratio(omega, v, params)
    target = T_g / (params.torque_factor * v * v)

    def excess(beta):
        return aeromap.eval(lam, beta)[0] - target

    lo, hi = beta_range
    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo < 0.0 or f_hi > 0.0:
        raise NumericalError(
            f"no trim pitch in [{lo}, {hi}] deg for v={v} m/s "
            f"(C_Q target {target:.4g} outside achievable range)"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    beta = 0.5 * (lo + hi)

    F_T, T_a = aero_forces(v, omega, beta, params, aeromap)
    k_B_eff = params.k_B + centrifugal_stiffness(omega, params)
    return PlantState(
        y_T=F_T / params.k_T,
        y_B=F_T / (params.N * k_B_eff),
        theta_s=T_a / params.k_s,
        y_T_dot=0.0,
        y_B_dot=0.0,
        omega_r=omega,
        omega_g=omega,
        beta=beta,
    )
