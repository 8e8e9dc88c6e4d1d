"""Simulation config files: INI-style sections mirroring SimConfig.

Every key has a default; unknown sections or keys are rejected so typos
cannot silently fall back to defaults.  See ``configs/`` in the source
tree for annotated examples.
"""

from __future__ import annotations

import configparser

from .aeromap import AnalyticAeroMap, load_aeromap_csv
from .errors import ValidationError
from .observer import ObserverState
from .plant import PlantState
from .sim import ControllerSettings, SimConfig
from .wind import WindScenario

_SCHEMA = {
    "scenario": {
        "kind", "v_mean", "gust_amplitude", "gust_start", "gust_duration",
        "turbulence_intensity", "seed", "dt", "duration", "tau_v", "wind_file",
    },
    "simulation": {
        "dt", "duration", "transient_cutoff", "vbar_mode", "vbar_fixed",
        "vbar_window", "noise_theta_s", "noise_omega_r", "noise_omega_g",
        "noise_seed",
    },
    "initial": {
        "y_t", "y_b", "theta_s", "y_t_dot", "y_b_dot", "omega_r", "omega_g",
        "beta", "theta_s_hat", "omega_r_hat", "omega_g_hat", "v_hat",
    },
    "observer": {"gains"},
    "controller": {
        "kp", "ki", "rated_speed", "rated_torque", "min_pitch", "max_pitch",
        "pitch_rate_limit",
    },
    "aeromap": {"backend", "file"},
    "output": {"prefix"},
}

_PLANT_KEYS = ("y_t", "y_b", "theta_s", "y_t_dot", "y_b_dot",
               "omega_r", "omega_g", "beta")


def _getfloat(sec, key, default):
    raw = sec.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"[{sec.name}] {key}: not a number: {raw!r}") from None


def _getint(sec, key, default):
    raw = sec.get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"[{sec.name}] {key}: not an integer: {raw!r}") from None


def load_sim_config(path) -> SimConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ValidationError(f"cannot read config file {path}")

    for section in cp.sections():
        if section not in _SCHEMA:
            raise ValidationError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ValidationError(f"unknown key {key!r} in section [{section}]")

    def sec(name):
        return cp[name] if cp.has_section(name) else cp["DEFAULT"]

    s = sec("scenario")
    m = sec("simulation")
    dt = _getfloat(m, "dt", 0.005)
    scenario = WindScenario(
        kind=s.get("kind", "constant"),
        v_mean=_getfloat(s, "v_mean", 18.0),
        gust_amplitude=_getfloat(s, "gust_amplitude", 6.0),
        gust_start=_getfloat(s, "gust_start", 30.0),
        gust_duration=_getfloat(s, "gust_duration", 10.5),
        turbulence_intensity=_getfloat(s, "turbulence_intensity", 0.1),
        seed=_getint(s, "seed", 1),
        dt=_getfloat(s, "dt", dt),
        duration=_getfloat(s, "duration", 60.0),
        tau_v=_getfloat(s, "tau_v", 4.0),
        wind_file=s.get("wind_file") or None,
    )

    ini = sec("initial")
    plant_given = any(k in ini for k in _PLANT_KEYS)
    initial_plant = None
    if plant_given:
        initial_plant = PlantState(
            y_T=_getfloat(ini, "y_t", 0.0),
            y_B=_getfloat(ini, "y_b", 0.0),
            theta_s=_getfloat(ini, "theta_s", 0.0),
            y_T_dot=_getfloat(ini, "y_t_dot", 0.0),
            y_B_dot=_getfloat(ini, "y_b_dot", 0.0),
            omega_r=_getfloat(ini, "omega_r", 0.0),
            omega_g=_getfloat(ini, "omega_g", 0.0),
            beta=_getfloat(ini, "beta", 0.0),
        )
    initial_observer = ObserverState(
        theta_s_hat=_getfloat(ini, "theta_s_hat", 0.1),
        omega_r_hat=_getfloat(ini, "omega_r_hat", 0.0),
        omega_g_hat=_getfloat(ini, "omega_g_hat", 0.0),
        v_hat=_getfloat(ini, "v_hat", 1.0),
    )

    c = sec("controller")
    controller = ControllerSettings(
        kp=_getfloat(c, "kp", ControllerSettings.kp),
        ki=_getfloat(c, "ki", ControllerSettings.ki),
        rated_speed=_getfloat(c, "rated_speed", ControllerSettings.rated_speed),
        rated_torque=_getfloat(c, "rated_torque", ControllerSettings.rated_torque),
        min_pitch=_getfloat(c, "min_pitch", ControllerSettings.min_pitch),
        max_pitch=_getfloat(c, "max_pitch", ControllerSettings.max_pitch),
        pitch_rate_limit=_getfloat(c, "pitch_rate_limit",
                                   ControllerSettings.pitch_rate_limit),
    )

    a = sec("aeromap")
    backend = a.get("backend", "analytic")
    if backend == "analytic":
        aeromap = AnalyticAeroMap()
    elif backend == "tabular":
        path_csv = a.get("file")
        if not path_csv:
            raise ValidationError("[aeromap] tabular backend requires file")
        aeromap = load_aeromap_csv(path_csv)
    else:
        raise ValidationError(f"[aeromap] unknown backend {backend!r}")

    o = sec("observer")
    out = sec("output")
    return SimConfig(
        scenario=scenario,
        dt=dt,
        duration=_getfloat(m, "duration", scenario.duration),
        transient_cutoff=_getfloat(m, "transient_cutoff", 20.0),
        aeromap=aeromap,
        initial_plant=initial_plant,
        initial_observer=initial_observer,
        gain_source=o.get("gains", "reference"),
        controller=controller,
        vbar_mode=m.get("vbar_mode", "fixed"),
        vbar_fixed=_getfloat(m, "vbar_fixed", None),
        vbar_window=_getfloat(m, "vbar_window", 600.0),
        noise_std=(
            _getfloat(m, "noise_theta_s", 0.0),
            _getfloat(m, "noise_omega_r", 0.0),
            _getfloat(m, "noise_omega_g", 0.0),
        ),
        noise_seed=_getint(m, "noise_seed", 0),
        output_prefix=out.get("prefix", "run"),
    )
