"""Physical parameter set of the reduced-order 5 MW turbine model.

All values describe the NREL 5 MW reference machine with an ideal 1:1
gearbox, i.e. generator quantities are referred to the low-speed shaft.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import ValidationError


@dataclass(frozen=True)
class TurbineParams:
    """Constants of the 4-DOF drivetrain/tower/blade model.

    Units: SI throughout; angles rad, pitch handled in degrees at the
    interfaces and converted where the aero maps are evaluated.
    """

    N: int = 3                  # blade count
    R: float = 63.0             # rotor radius [m]
    rho: float = 1.225          # air density [kg/m^3]
    J_r: float = 38759227.0     # rotor inertia [kg m^2]
    J_g: float = 5025347.0      # generator inertia, low-speed side [kg m^2]
    k_s: float = 867637000.0    # shaft torsional stiffness [Nm/rad]
    d_s: float = 6215000.0      # shaft torsional damping [Nm s/rad]
    k_T: float = 1.98e6         # tower fore-aft spring [N/m]
    k_B: float = 4.0e4          # blade flap spring [N/m]
    d_T: float = 7.0e4          # tower fore-aft damper [N s/m]
    d_B: float = 2.0e4          # blade flap damper [N s/m]
    m_T: float = 436865.0       # effective tower-top mass [kg]
    m_B: float = 4435.0         # effective blade-tip mass [kg]
    alpha: float = 0.02         # centrifugal stiffening constant [1/m]
    r_B: float = 21.975         # blade root to centre of mass [m]
    tau: float = 0.1            # pitch actuator lag [s]
    tau_v: float = 4.0          # wind relaxation time constant [s]

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValidationError(f"parameter {f.name} must be finite")
            if f.name == "alpha":
                if v < 0:
                    raise ValidationError("alpha must be >= 0")
            elif v <= 0:
                raise ValidationError(f"parameter {f.name} must be > 0")

    # precomputed aero prefactors, shared by plant and observer

    @property
    def thrust_factor(self) -> float:
        """0.5 rho pi R^2, so that F_T = thrust_factor * C_T * v^2."""
        return 0.5 * self.rho * math.pi * self.R ** 2

    @property
    def torque_factor(self) -> float:
        """0.5 rho pi R^3, so that T_a = torque_factor * C_Q * v^2."""
        return 0.5 * self.rho * math.pi * self.R ** 3

    @property
    def premise_factor(self) -> float:
        """torque_factor / J_r; multiplies v*C_Q in the observer premise."""
        return self.torque_factor / self.J_r


# component masses behind the effective values above (tower-top mass is
# rotor + nacelle + a quarter of the tower, blade-tip mass a quarter blade)
M_BLADE = 17740.0
M_TOWER = 347640.0
M_ROTOR = 110000.0
M_NACELLE = 240000.0

# operating envelope used for aero singularities and the wind estimate
V_FLOOR = 0.5        # below this wind speed aero forces are zeroed [m/s]
LAMBDA_CAP = 20.0    # tip speed ratio reported below V_FLOOR
V_HAT_MIN = 1.0      # wind estimate clamp, lower [m/s]
V_HAT_MAX = 60.0     # wind estimate clamp, upper [m/s]
