"""Disturbance observer estimating the rotor-effective wind speed.

The observer model keeps only the rotational/torsional degrees of freedom
and appends the wind speed as a fourth state driven by a first-order
relaxation toward the 10-min mean.  The single scalar nonlinearity (the
wind-to-rotor-acceleration gain) is sector-bounded, giving a two-rule
blend whose correction gains feed back the measured (theta_s, omega_r,
omega_g).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .params import TurbineParams, V_HAT_MAX, V_HAT_MIN
from .plant import tip_speed_ratio
from .tscore import SectorBounds, TSModel, TSSubmodel, sector_weights

# sector extrema of the premise nonlinearity over the design envelope
# v in [1, 60] m/s, C_Q in [0.001, 0.0751]
F_BOUND_MIN = 1.2414e-5   # [1/(m s)]
F_BOUND_MAX = 0.0559      # [1/(m s)]

# correction gains of the shipped reference design (rounded; the two
# vertex gains agree to well below one percent, so one matrix serves both)
_REFERENCE_L = (
    (0.147, -176.5, 143.6),
    (-0.022, 133.0, -28.6),
    (0.183, -286.1, 303.2),
    (0.08, 6698.1, 741.2),
)


def reference_gains() -> tuple[np.ndarray, np.ndarray]:
    """The built-in correction gain preset (L1, L2)."""
    L = np.array(_REFERENCE_L, dtype=float)
    return L.copy(), L.copy()


@dataclass(frozen=True)
class ObserverState:
    """Estimated shaft torsion [rad], speeds [rad/s] and wind speed [m/s]."""

    theta_s_hat: float = 0.0
    omega_r_hat: float = 0.0
    omega_g_hat: float = 0.0
    v_hat: float = V_HAT_MIN

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_s_hat, self.omega_r_hat,
                         self.omega_g_hat, self.v_hat])

    @classmethod
    def from_array(cls, arr) -> "ObserverState":
        return cls(*(float(v) for v in arr))

    def clamped(self) -> "ObserverState":
        """Wind estimate clamped into the sector envelope [1, 60] m/s."""
        v = min(max(self.v_hat, V_HAT_MIN), V_HAT_MAX)
        return self if v == self.v_hat else replace(self, v_hat=v)


@dataclass(frozen=True)
class Measurement:
    """Measured shaft torsion [rad] and shaft speeds [rad/s]."""

    theta_s: float
    omega_r: float
    omega_g: float

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_s, self.omega_r, self.omega_g])


@dataclass(frozen=True)
class ObserverConfig:
    """Vertex matrices, output map, sector bounds and correction gains.

    A1 carries the sector maximum in the wind-coupling entry (row 2,
    column 4), A2 the minimum; the matrices are identical elsewhere.
    C = [I3 | 0] selects the three measured states.
    """

    A1: np.ndarray
    A2: np.ndarray
    B: np.ndarray
    C: np.ndarray
    bounds: SectorBounds
    tau_v: float
    v_bar: float = 18.0
    L1: np.ndarray | None = None
    L2: np.ndarray | None = None

    @property
    def has_gains(self) -> bool:
        return self.L1 is not None and self.L2 is not None

    def with_gains(self, L1, L2) -> "ObserverConfig":
        L1 = np.asarray(L1, dtype=float)
        L2 = np.asarray(L2, dtype=float)
        if L1.shape != (4, 3) or L2.shape != (4, 3):
            raise ValidationError("correction gains must be 4x3")
        return replace(self, L1=L1, L2=L2)


def observer_premise(v_hat: float, omega_r_hat: float, beta_d: float,
                     params: TurbineParams, aeromap,
                     bounds: SectorBounds | None = None) -> float:
    """Wind-to-rotor-acceleration gain [1/(m s)].

    Equals (0.5 rho pi R^3 / J_r) * v_hat * C_Q(lambda_hat, beta_d); the
    rotor acceleration contribution of the wind is this value times v_hat.
    When ``bounds`` is given the result is clamped into the sector.
    """
    lam = tip_speed_ratio(omega_r_hat, v_hat, params)
    cq, _ = aeromap.eval(lam, beta_d)
    f = params.premise_factor * v_hat * cq
    if bounds is not None:
        f = min(max(f, bounds.f_min), bounds.f_max)
    return f


def wind_relaxation_rate(v_hat: float, v_bar: float, tau_v: float) -> float:
    """First-order relaxation of the wind estimate toward the mean."""
    if tau_v <= 0:
        raise ValidationError("tau_v must be > 0")
    return -(v_hat - v_bar) / tau_v


def _system_matrix(f: float, params: TurbineParams, tau_v: float) -> np.ndarray:
    p = params
    return np.array([
        [0.0, 1.0, -1.0, 0.0],
        [-p.k_s / p.J_r, -p.d_s / p.J_r, p.d_s / p.J_r, f],
        [p.k_s / p.J_g, p.d_s / p.J_g, -p.d_s / p.J_g, 0.0],
        [0.0, 0.0, 0.0, -1.0 / tau_v],
    ])


def nonlinear_system_matrix(v_hat: float, omega_r_hat: float, beta_d: float,
                            params: TurbineParams, aeromap,
                            bounds: SectorBounds) -> np.ndarray:
    """Observer system matrix with the premise evaluated at the given state."""
    f = observer_premise(v_hat, omega_r_hat, beta_d, params, aeromap, bounds)
    return _system_matrix(f, params, params.tau_v)


def build_observer_matrices(params: TurbineParams,
                            bounds: SectorBounds | None = None,
                            v_bar: float = 18.0) -> ObserverConfig:
    """Vertex matrices and output map, without correction gains."""
    if bounds is None:
        bounds = SectorBounds(F_BOUND_MIN, F_BOUND_MAX)
    B = np.zeros((4, 2))
    B[2, 0] = -1.0 / params.J_g
    B[3, 1] = 1.0 / params.tau_v
    C = np.hstack([np.eye(3), np.zeros((3, 1))])
    return ObserverConfig(
        A1=_system_matrix(bounds.f_max, params, params.tau_v),
        A2=_system_matrix(bounds.f_min, params, params.tau_v),
        B=B,
        C=C,
        bounds=bounds,
        tau_v=params.tau_v,
        v_bar=v_bar,
    )


def observer_memberships(x_hat: ObserverState, beta_d: float,
                         config: ObserverConfig, params: TurbineParams,
                         aeromap) -> tuple[float, float]:
    f = observer_premise(x_hat.v_hat, x_hat.omega_r_hat, beta_d,
                         params, aeromap)
    return sector_weights(f, config.bounds)


def observer_derivative(x_hat: ObserverState, y: Measurement,
                        u: tuple[float, float], beta_d: float,
                        config: ObserverConfig, params: TurbineParams,
                        aeromap) -> ObserverState:
    """Estimate dynamics: blended model plus blended output-error feedback.

    ``u`` is (generator torque [Nm], mean wind speed [m/s]).
    """
    if not config.has_gains:
        raise ValidationError("observer config carries no correction gains")
    h1, h2 = observer_memberships(x_hat, beta_d, config, params, aeromap)
    xv = x_hat.as_array()
    uv = np.array([u[0], u[1]])
    ey = y.as_array() - config.C @ xv
    rate = (h1 * (config.A1 @ xv + config.B @ uv + config.L1 @ ey)
            + h2 * (config.A2 @ xv + config.B @ uv + config.L2 @ ey))
    return ObserverState(*rate)


def ts_model_from_config(config: ObserverConfig, params: TurbineParams,
                         aeromap) -> TSModel:
    """The observer as a generic two-rule sector model.

    The premise takes the 4-entry estimated state and the demanded pitch
    as the exogenous extra input.
    """

    def premise(x, extra=None):
        beta_d = 0.0 if extra is None else float(np.atleast_1d(extra)[0])
        return (observer_premise(float(x[3]), float(x[1]), beta_d,
                                 params, aeromap, config.bounds),)

    return TSModel(
        submodels=(TSSubmodel(config.A1, config.B),
                   TSSubmodel(config.A2, config.B)),
        bounds=(config.bounds,),
        premise=premise,
        C=config.C,
    )


# --- gain preset files ------------------------------------------------------

def save_gain_file(path, L1, L2, comment: str | None = None) -> None:
    """Write two 4x3 gain matrices as plain text; '#' starts a comment."""
    L1 = np.asarray(L1, dtype=float)
    L2 = np.asarray(L2, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        for tag, L in (("first", L1), ("second", L2)):
            fh.write(f"# {tag} vertex gain (4 rows x 3 columns)\n")
            for row in L:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_gain_file(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a gain preset file written by :func:`save_gain_file`."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValidationError(f"{path}:{ln}: expected 3 columns")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise ValidationError(f"{path}:{ln}: {exc}") from None
    if len(rows) != 8:
        raise ValidationError(
            f"{path}: expected 8 gain rows (two 4x3 matrices), got {len(rows)}"
        )
    arr = np.array(rows)
    return arr[:4].copy(), arr[4:].copy()
