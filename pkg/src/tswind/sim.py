"""Closed-loop batch simulation of plant + observer + pitch controller.

One run is a fixed-step loop: sample the wind, advance the plant one RK4
step, synthesize the measurements (the torsion angle by trapezoidal
integration of the measured speed difference, mirroring how it would be
obtained from encoder speed signals), advance the observer one RK4 step,
clamp the wind estimate, then update the controller.  The loop itself
lives in :mod:`tswind.kernels` with interchangeable compiled and
pure-Python backends.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .aeromap import AnalyticAeroMap
from .errors import NumericalError, SimulationDiverged, ValidationError
from .observer import (ObserverState, build_observer_matrices, load_gain_file,
                       reference_gains)
from .params import TurbineParams, V_HAT_MAX, V_HAT_MIN
from .plant import PlantState, trim_state
from .design import build_weight_matrices, synthesize_gains
from .wind import SplitMix64, WindScenario, rolling_mean, sample_half_grid
from . import kernels

log = logging.getLogger("tswind")

RATED_SPEED = 12.1 * math.pi / 30.0     # [rad/s], low-speed shaft
RATED_TORQUE = 43093.55 * 97.0          # [Nm], referred to the low-speed shaft

TRACE_COLUMNS = ("t", "v_true", "v_hat", "omega_r", "omega_r_hat", "omega_g",
                 "omega_g_hat", "theta_s", "theta_s_hat", "beta", "beta_d",
                 "t_g", "h1")

GAIN_PRESETS = ("reference", "synthesized")


def rk4_step(deriv, state, t: float, dt: float):
    """One classical 4th-order Runge-Kutta step of ``d state/dt = deriv(t, state)``."""
    if dt <= 0:
        raise ValidationError("dt must be > 0")
    state = np.asarray(state, dtype=float)
    k1 = np.asarray(deriv(t, state), dtype=float)
    k2 = np.asarray(deriv(t + 0.5 * dt, state + 0.5 * dt * k1), dtype=float)
    k3 = np.asarray(deriv(t + 0.5 * dt, state + 0.5 * dt * k2), dtype=float)
    k4 = np.asarray(deriv(t + dt, state + dt * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise NumericalError(f"non-finite derivative at t={t!r}")
    return state + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


@dataclass(frozen=True)
class ControllerSettings:
    """Speed-regulating PI pitch loop; torque held at rated.

    Gains act on the generator speed error in rad/s and produce degrees
    of pitch; they are tuned for the default plant at 18 m/s.
    """

    kp: float = 40.0                 # [deg/(rad/s)]
    ki: float = 5.0                  # [deg/rad]
    rated_speed: float = RATED_SPEED
    rated_torque: float = RATED_TORQUE
    min_pitch: float = 0.0           # [deg]
    max_pitch: float = 90.0          # [deg]
    pitch_rate_limit: float = 8.0    # [deg/s]

    def __post_init__(self):
        if self.min_pitch >= self.max_pitch:
            raise ValidationError("min_pitch must be below max_pitch")
        if self.pitch_rate_limit <= 0 or self.rated_speed <= 0:
            raise ValidationError("rate limit and rated speed must be > 0")
        if self.rated_torque < 0:
            raise ValidationError("rated torque must be >= 0")


class PIPitchController:
    """Stateful PI regulator with rate limiting and conditional anti-windup."""

    def __init__(self, settings: ControllerSettings, beta_ref: float):
        self.s = settings
        self.beta_ref = float(beta_ref)
        self.beta_d = min(max(float(beta_ref), settings.min_pitch),
                          settings.max_pitch)
        self.integ = 0.0

    def update(self, omega_g: float, dt: float) -> tuple[float, float]:
        s = self.s
        e = omega_g - s.rated_speed
        trial = self.beta_ref + s.kp * e + s.ki * (self.integ + e * dt)
        lo = max(s.min_pitch, self.beta_d - s.pitch_rate_limit * dt)
        hi = min(s.max_pitch, self.beta_d + s.pitch_rate_limit * dt)
        if not ((trial > hi and e > 0.0) or (trial < lo and e < 0.0)):
            self.integ += e * dt
        out = self.beta_ref + s.kp * e + s.ki * self.integ
        self.beta_d = min(max(out, lo), hi)
        return self.beta_d, s.rated_torque


@dataclass(frozen=True)
class SimConfig:
    """Everything one closed-loop run needs."""

    scenario: WindScenario
    dt: float = 0.005
    duration: float | None = None        # default: scenario duration
    transient_cutoff: float = 20.0       # metrics start here [s]
    params: TurbineParams = field(default_factory=TurbineParams)
    aeromap: object | None = None        # default: AnalyticAeroMap()
    initial_plant: PlantState | None = None   # default: trim at v_mean
    initial_observer: ObserverState = field(
        default_factory=lambda: ObserverState(0.1, 0.0, 0.0, 1.0))
    gain_source: str = "reference"       # preset name or a gain file path
    controller: ControllerSettings = field(default_factory=ControllerSettings)
    vbar_mode: str = "fixed"             # "fixed" | "rolling"
    vbar_fixed: float | None = None      # default: scenario v_mean
    vbar_window: float = 600.0           # rolling window [s]
    noise_std: tuple[float, float, float] = (0.0, 0.0, 0.0)
    noise_seed: int = 0
    output_prefix: str = "run"

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.02:
            raise ValidationError("dt must be in (0, 0.02] s")
        dur = self.duration if self.duration is not None else self.scenario.duration
        if dur < 10.0 * self.dt:
            raise ValidationError("duration must be at least 10 time steps")
        if self.vbar_mode not in ("fixed", "rolling"):
            raise ValidationError(f"unknown vbar mode {self.vbar_mode!r}")
        if any(s < 0 for s in self.noise_std) or len(self.noise_std) != 3:
            raise ValidationError("noise_std must be three values >= 0")
        if not V_HAT_MIN <= self.initial_observer.v_hat <= V_HAT_MAX:
            raise ValidationError("initial wind estimate outside [1, 60] m/s")

    @property
    def sim_duration(self) -> float:
        return self.duration if self.duration is not None else self.scenario.duration


@dataclass
class SimTrace:
    """Per-step record of truth, estimates, inputs and membership."""

    data: np.ndarray                     # (n_rows, 13), TRACE_COLUMNS order
    clamp_count: int = 0
    negative_omega_steps: int = 0
    diverged: bool = False
    backend: str = "python"

    def __len__(self):
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, TRACE_COLUMNS.index(name)]

    def __getattr__(self, name):
        if name in TRACE_COLUMNS:
            return self.data[:, TRACE_COLUMNS.index(name)]
        raise AttributeError(name)


@dataclass(frozen=True)
class MetricsReport:
    """Post-transient tracking quality of one run."""

    rmse_v: float
    rmse_omega_r: float
    rmse_omega_g: float
    rmse_theta_s: float
    lag_v: float | None
    transient_duration: float
    clamp_activations: int
    negative_omega_steps: int

    def as_text(self) -> str:
        lag = "undefined" if self.lag_v is None else f"{self.lag_v:.6g} s"
        return "\n".join([
            f"rmse_v = {self.rmse_v:.6g} m/s",
            f"rmse_omega_r = {self.rmse_omega_r:.6g} rad/s",
            f"rmse_omega_g = {self.rmse_omega_g:.6g} rad/s",
            f"rmse_theta_s = {self.rmse_theta_s:.6g} rad",
            f"lag_v = {lag}",
            f"transient_duration = {self.transient_duration:.6g} s",
            f"clamp_activations = {self.clamp_activations}",
            f"negative_omega_steps = {self.negative_omega_steps}",
        ]) + "\n"


def resolve_gains(source: str, params: TurbineParams | None = None):
    """Map a gain source ('reference' | 'synthesized' | file path) to (L1, L2)."""
    if source == "reference":
        return reference_gains()
    if source == "synthesized":
        cfg = build_observer_matrices(params if params is not None else TurbineParams())
        design = synthesize_gains([cfg.A1, cfg.A2], cfg.C, build_weight_matrices())
        return design.L[0], design.L[1]
    return load_gain_file(source)


def _noise_samples(config: SimConfig, n_rows: int) -> np.ndarray:
    stds = config.noise_std
    if not any(s > 0 for s in stds):
        return np.zeros(0)
    rng = SplitMix64(config.noise_seed)
    out = np.empty(3 * n_rows)
    for k in range(n_rows):
        for j in range(3):
            out[3 * k + j] = stds[j] * rng.gauss()
    return out


def run_closed_loop(config: SimConfig, backend: str | None = None
                    ) -> tuple[SimTrace, MetricsReport]:
    """Integrate one scenario and return the trace plus tracking metrics.

    Raises :class:`SimulationDiverged` (with the partial trace attached)
    if any state goes non-finite.
    """
    params = config.params
    aeromap = config.aeromap if config.aeromap is not None else AnalyticAeroMap()
    n_steps = int(round(config.sim_duration / config.dt))
    v_half = sample_half_grid(config.scenario, n_steps, config.dt)

    if config.vbar_mode == "fixed":
        vb = config.vbar_fixed if config.vbar_fixed is not None else config.scenario.v_mean
        vbar = np.full(n_steps + 1, float(vb))
    else:
        vbar = rolling_mean(v_half[::2], config.vbar_window, config.dt)

    x0 = config.initial_plant
    if x0 is None:
        x0 = trim_state(config.scenario.v_mean, config.controller.rated_speed,
                        config.controller.rated_torque, params, aeromap)
    xh0 = config.initial_observer.clamped()

    obs = build_observer_matrices(params)
    L1, L2 = resolve_gains(config.gain_source, params)

    ctrl = config.controller
    ctrl_vec = np.array([ctrl.kp, ctrl.ki, ctrl.rated_speed, ctrl.rated_torque,
                         ctrl.min_pitch, ctrl.max_pitch, ctrl.pitch_rate_limit,
                         x0.beta])
    noise = _noise_samples(config, n_steps + 1)

    status, n_done, clamps, neg_omega, data, used = kernels.run_closed_loop_arrays(
        n_steps=n_steps, dt=config.dt,
        x0=x0.as_array(), xh0=xh0.as_array(),
        v_half=v_half, vbar=vbar,
        params=params, obs_config=obs, L1=L1, L2=L2,
        ctrl=ctrl_vec, aeromap=aeromap, noise=noise,
        backend=backend,
    )

    trace = SimTrace(data=data[: n_done + 1], clamp_count=clamps,
                     negative_omega_steps=neg_omega,
                     diverged=(status != 0), backend=used)
    if neg_omega:
        log.warning("rotor speed went negative during %d step(s)", neg_omega)
    if clamps:
        log.warning("wind estimate clamp activated %d time(s)", clamps)
    if status != 0:
        raise SimulationDiverged(
            f"state became non-finite at step {n_done + 1}", trace=trace)
    return trace, compute_metrics(trace, config)


# --- metrics ----------------------------------------------------------------

def compute_lag(v_true, v_hat, dt: float, max_lag: float = 5.0,
                significance: float | None = None) -> float | None:
    """Delay of the estimate behind the truth, by cross-correlation.

    Returns the shift (positive = estimate late) maximizing the normalized
    cross-correlation over [-max_lag, max_lag], refined to sub-sample
    resolution by a parabolic fit through the peak.  When the peak
    correlation is insignificant against the white-noise null
    (sqrt(2 ln(200 m)) / sqrt(n) for m candidate shifts by default),
    ``None`` is returned.
    """
    a = np.asarray(v_true, dtype=float)
    b = np.asarray(v_hat, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("series must be 1-D and equally long")
    n = a.size
    k_max = int(round(max_lag / dt))
    if n < 4 or n <= k_max + 2:
        raise ValidationError("series too short for the requested lag window")
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        raise ValidationError("zero-variance input")
    a = (a - a.mean()) / sa
    b = (b - b.mean()) / sb

    shifts = range(-k_max, k_max + 1)
    corr = np.empty(2 * k_max + 1)
    for idx, k in enumerate(shifts):
        if k >= 0:
            c = float(np.dot(a[: n - k], b[k:])) / (n - k)
        else:
            c = float(np.dot(a[-k:], b[: n + k])) / (n + k)
        corr[idx] = c

    peak = int(np.argmax(np.abs(corr)))
    m = corr.size
    if significance is None:
        significance = math.sqrt(2.0 * math.log(200.0 * m)) / math.sqrt(n)
    if abs(corr[peak]) < significance:
        return None

    lag = (peak - k_max) * dt
    if 0 < peak < m - 1:
        c_m, c_0, c_p = corr[peak - 1], corr[peak], corr[peak + 1]
        denom = c_m - 2.0 * c_0 + c_p
        if denom != 0.0:
            lag += 0.5 * (c_m - c_p) / denom * dt
    return lag


def decay_envelope(values, t, window: float) -> np.ndarray:
    """Per-window maxima of |values|, for monotone-decay checks."""
    values = np.abs(np.asarray(values, dtype=float))
    t = np.asarray(t, dtype=float)
    if values.size == 0:
        raise ValidationError("empty series")
    edges = np.arange(t[0], t[-1] + window, window)
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (t >= lo) & (t < hi)
        if np.any(mask):
            out.append(values[mask].max())
    return np.array(out)


def compute_metrics(trace: SimTrace, config: SimConfig) -> MetricsReport:
    t = trace.t
    post = t >= config.transient_cutoff
    if not np.any(post):
        post = np.ones_like(t, dtype=bool)

    def rmse(a, b):
        d = a[post] - b[post]
        return float(np.sqrt(np.mean(d * d)))

    try:
        lag = compute_lag(trace.v_true[post], trace.v_hat[post], config.dt)
    except ValidationError:
        lag = None

    # transient end: the 5 s trailing mean of the wind-estimate error first
    # drops inside the band (instantaneous error is too twitchy under
    # turbulence to mark convergence)
    verr = np.abs(trace.v_hat - trace.v_true)
    vb = config.vbar_fixed if config.vbar_fixed is not None else config.scenario.v_mean
    band = max(0.05 * vb, 0.1)
    smooth = rolling_mean(verr, max(5.0, config.dt), config.dt)
    below = np.where(smooth <= band)[0]
    transient = float(t[below[0]] - t[0]) if below.size else float(t[-1] - t[0])

    return MetricsReport(
        rmse_v=rmse(trace.v_true, trace.v_hat),
        rmse_omega_r=rmse(trace.omega_r, trace.omega_r_hat),
        rmse_omega_g=rmse(trace.omega_g, trace.omega_g_hat),
        rmse_theta_s=rmse(trace.theta_s, trace.theta_s_hat),
        lag_v=lag,
        transient_duration=transient,
        clamp_activations=trace.clamp_count,
        negative_omega_steps=trace.negative_omega_steps,
    )


# --- CSV --------------------------------------------------------------------

def emit_csv(trace: SimTrace, path) -> None:
    """Write the trace; floats use shortest round-trip formatting."""
    if len(trace) == 0:
        raise ValidationError("refusing to write an empty trace")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in trace.data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_trace_csv(path) -> SimTrace:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != ",".join(TRACE_COLUMNS):
            raise ValidationError(f"unexpected trace header in {path}")
        rows = []
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(TRACE_COLUMNS):
                raise ValidationError(f"{path}:{ln}: wrong column count")
            rows.append([float(p) for p in parts])
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    return SimTrace(data=np.array(rows))
