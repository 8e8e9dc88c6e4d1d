"""Simulation loop backends.

The closed-loop stepper exists twice: a pure-Python reference
(:mod:`.reference`) and an optional Cython translation of the same
arithmetic (:mod:`._compiled`), selected at import time.  Both consume the
same flat parameter arrays built here, perform operations in the same
order, and are expected to agree to the last bit; ``benchmarks/`` holds a
script comparing their speed and output.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..params import LAMBDA_CAP, V_FLOOR, V_HAT_MAX, V_HAT_MIN

try:
    from . import _compiled  # noqa: F401
    HAVE_COMPILED = True
except ImportError:
    _compiled = None
    HAVE_COMPILED = False

from . import reference

DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "python"

N_COLUMNS = 13


def available_backends() -> tuple[str, ...]:
    return ("python", "compiled") if HAVE_COMPILED else ("python",)


def pack_params(p) -> np.ndarray:
    """Flatten plant/observer constants for the loop backends.

    Derived coefficients are computed once here so both backends consume
    bit-identical values.
    """
    c5_kBf = 1.0 / p.m_B + p.N / p.m_T
    return np.array([
        p.R,                      # 0
        V_FLOOR,                  # 1
        LAMBDA_CAP,               # 2
        p.thrust_factor,          # 3
        p.torque_factor,          # 4
        p.k_T / p.m_T,            # 5  tower eq: stiffness
        p.N / p.m_T,              # 6  tower eq: blade-spring coupling
        p.d_T / p.m_T,            # 7
        p.N * p.d_B / p.m_T,      # 8
        p.k_T / p.m_T,            # 9  blade eq
        c5_kBf,                   # 10
        p.d_T / p.m_T,            # 11
        c5_kBf * p.d_B,           # 12
        1.0 / (p.N * p.m_B),      # 13
        p.k_s / p.J_r,            # 14
        p.d_s / p.J_r,            # 15
        1.0 / p.J_r,              # 16
        p.k_s / p.J_g,            # 17
        p.d_s / p.J_g,            # 18
        1.0 / p.J_g,              # 19
        1.0 / p.tau,              # 20
        p.k_B,                    # 21
        p.alpha * p.m_B * p.r_B,  # 22 centrifugal prefactor
        p.premise_factor,         # 23
        0.0,                      # 24 f_min, filled from the observer config
        1.0,                      # 25 f_max, filled from the observer config
        V_HAT_MIN,                # 26
        V_HAT_MAX,                # 27
    ])


def run_closed_loop_arrays(*, n_steps, dt, x0, xh0, v_half, vbar, params,
                           obs_config, L1, L2, ctrl, aeromap, noise,
                           backend=None):
    """Run the loop on flat arrays; returns (status, n_done, clamps,
    negative-omega steps, trace matrix, backend name)."""
    name = backend or DEFAULT_BACKEND
    if name not in ("python", "compiled"):
        raise ValidationError(f"unknown backend {name!r}")
    if name == "compiled" and not HAVE_COMPILED:
        raise ValidationError("compiled kernel is not available in this install")

    pp = pack_params(params)
    pp[24] = obs_config.bounds.f_min
    pp[25] = obs_config.bounds.f_max

    # the loop rebuilds the blended matrix from the vertex entries in the
    # wind-coupling slot; everything else must be vertex-independent
    diff = np.asarray(obs_config.A1) - np.asarray(obs_config.A2)
    diff[1, 3] = 0.0
    if np.any(diff != 0.0) or obs_config.A1[1, 3] != obs_config.bounds.f_max \
            or obs_config.A2[1, 3] != obs_config.bounds.f_min:
        raise ValidationError(
            "observer vertex matrices must differ only in the wind-coupling "
            "entry, holding the sector bounds")

    obs_a = np.ascontiguousarray(obs_config.A1, dtype=float).reshape(-1).copy()
    obs_a[1 * 4 + 3] = 0.0  # wind-coupling slot is blended per substep
    obs_b = np.ascontiguousarray(obs_config.B, dtype=float).reshape(-1)
    L1 = np.ascontiguousarray(L1, dtype=float).reshape(-1)
    L2 = np.ascontiguousarray(L2, dtype=float).reshape(-1)
    if L1.size != 12 or L2.size != 12:
        raise ValidationError("gain matrices must be 4x3")

    tag, a0, a1, a2, a3 = aeromap.pack()

    out = np.zeros((n_steps + 1, N_COLUMNS))
    args = (
        int(n_steps), float(dt),
        np.asarray(x0, dtype=float), np.asarray(xh0, dtype=float),
        np.asarray(v_half, dtype=float), np.asarray(vbar, dtype=float),
        pp, obs_a, obs_b, L1, L2,
        np.asarray(ctrl, dtype=float),
        int(tag), a0, a1, a2, a3,
        np.asarray(noise, dtype=float), out,
    )
    if name == "compiled":
        status, n_done, clamps, neg = _compiled.run_loop(*args)
    else:
        status, n_done, clamps, neg = reference.run_loop(*args)
    return status, n_done, clamps, neg, out, name
