"""Wind input generation: gusts, stochastic turbulence, file playback.

Everything here is deterministic.  Randomness comes from a small
integer-state generator with a documented algorithm so that seeded runs
reproduce bit-identically across platforms and Python versions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

KINDS = ("constant", "eog", "turbulent", "file")

# extreme-gust waveform length; the standard coherent-gust duration
EOG_DURATION = 10.5  # [s]


class SplitMix64:
    """64-bit splitmix generator with Box-Muller gaussians.

    state' = state + 0x9E3779B97F4A7C15 (mod 2^64); the output is the
    standard splitmix64 finalizer of state'.  Uniforms take the top 53
    bits; gaussians are produced in pairs from two uniforms.
    """

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self._state = int(seed) & self._MASK
        self._spare = None

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & self._MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def gauss(self) -> float:
        if self._spare is not None:
            g, self._spare = self._spare, None
            return g
        # Box-Muller; u1 > 0 guaranteed by the +1 offset in the mantissa
        u1 = (self.next_u64() >> 11) + 1
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1 * (1.0 / (1 << 53))))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class WindScenario:
    """Description of one wind input realization."""

    kind: str = "constant"
    v_mean: float = 18.0              # [m/s]
    gust_amplitude: float = 6.0       # [m/s], gust kinds only
    gust_start: float = 30.0          # [s]
    gust_duration: float = EOG_DURATION  # [s]
    turbulence_intensity: float = 0.1
    seed: int = 1
    dt: float = 0.005                 # sample step of generated series [s]
    duration: float = 60.0            # [s]
    tau_v: float = 4.0                # relaxation constant of turbulence [s]
    wind_file: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown wind kind {self.kind!r}")
        if self.v_mean < 1.0:
            raise ValidationError("v_mean must be >= 1 m/s")
        if self.dt <= 0 or self.duration <= 0:
            raise ValidationError("dt and duration must be > 0")
        if self.gust_duration <= 0:
            raise ValidationError("gust_duration must be > 0")
        if self.turbulence_intensity < 0:
            raise ValidationError("turbulence_intensity must be >= 0")
        if self.kind == "file" and not self.wind_file:
            raise ValidationError("file scenario requires wind_file")


def eog_speed(t: float, scenario: WindScenario) -> float:
    """Extreme-operating-gust waveform: mean outside the window, the
    standard sin*(1-cos) double-dip/peak shape inside.  Floored at zero
    so oversized amplitudes cannot produce negative wind speeds."""
    if scenario.kind != "eog":
        raise ValidationError("eog_speed needs an eog scenario")
    s = t - scenario.gust_start
    T = scenario.gust_duration
    if s <= 0.0 or s >= T:
        return scenario.v_mean
    v = scenario.v_mean - 0.37 * scenario.gust_amplitude \
        * math.sin(3.0 * math.pi * s / T) * (1.0 - math.cos(2.0 * math.pi * s / T))
    return v if v > 0.0 else 0.0


def turbulent_series(scenario: WindScenario) -> np.ndarray:
    """First-order relaxation process with white-noise forcing.

    v[k+1] = v[k] - (dt/tau_v)(v[k] - v_mean) + sigma sqrt(dt) xi[k], with
    sigma chosen so the stationary standard deviation equals
    turbulence_intensity * v_mean.  Samples are clamped to >= 0.  The
    series starts at v_mean and is bit-reproducible for a fixed seed.
    """
    n = int(round(scenario.duration / scenario.dt))
    a = scenario.dt / scenario.tau_v
    if a >= 1.0:
        raise ValidationError("dt must be well below tau_v")
    target_sd = scenario.turbulence_intensity * scenario.v_mean
    sigma = target_sd * math.sqrt((2.0 - a) / scenario.tau_v)
    rng = SplitMix64(scenario.seed)
    out = np.empty(n + 1)
    v = scenario.v_mean
    out[0] = v
    sq = sigma * math.sqrt(scenario.dt)
    for k in range(n):
        v = v - a * (v - scenario.v_mean) + sq * rng.gauss()
        if v < 0.0:
            v = 0.0
        out[k + 1] = v
    return out


def rolling_mean(values, window: float, dt: float) -> np.ndarray:
    """Causal trailing average over ``window`` seconds.

    Discrete boxcar over round(window/dt) samples ending at the current
    one (so a full-window ramp averages to the value dt/2 ahead of the
    continuous window centre).  Before one full window has accumulated,
    the average runs over the available prefix.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValidationError("empty series")
    if window < dt:
        raise ValidationError("window must be >= dt")
    w = int(round(window / dt))
    out = np.empty_like(values)
    acc = 0.0
    for k in range(values.size):
        acc += values[k]
        if k >= w:
            acc -= values[k - w]
            out[k] = acc / w
        else:
            out[k] = acc / (k + 1)
    return out


def load_wind_file(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column CSV ``t,v`` with strictly increasing time."""
    ts, vs = [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().lower().replace(" ", "")
        if header != "t,v":
            raise ValidationError(f"bad wind file header {header!r} in {path}")
        for ln, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValidationError(f"{path}:{ln}: expected 2 columns")
            try:
                ts.append(float(parts[0]))
                vs.append(float(parts[1]))
            except ValueError as exc:
                raise ValidationError(f"{path}:{ln}: {exc}") from None
    if not ts:
        raise ValidationError(f"{path}: no samples")
    t = np.array(ts)
    v = np.array(vs)
    if np.any(np.diff(t) <= 0):
        raise ValidationError(f"{path}: time column must be strictly increasing")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValidationError(f"{path}: wind samples must be finite and >= 0")
    return t, v


def sample_half_grid(scenario: WindScenario, n_steps: int, dt: float) -> np.ndarray:
    """Wind speed at t = j*dt/2 for j = 0..2n, as the simulator consumes it.

    Continuous kinds are evaluated directly; sampled kinds (turbulent,
    file) are linearly interpolated.
    """
    times = np.arange(2 * n_steps + 1) * (0.5 * dt)
    if scenario.kind == "constant":
        return np.full(times.size, scenario.v_mean)
    if scenario.kind == "eog":
        return np.array([eog_speed(t, scenario) for t in times])
    if scenario.kind == "turbulent":
        series = turbulent_series(scenario)
        src_t = np.arange(series.size) * scenario.dt
        return np.interp(times, src_t, series)
    t, v = load_wind_file(scenario.wind_file)
    return np.interp(times, t, v)
