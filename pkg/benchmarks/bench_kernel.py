#!/usr/bin/env python3
"""Timing and agreement comparison of the simulation loop backends.

Runs the same closed-loop scenarios through the pure-Python reference
loop and (when built) the compiled kernel, reporting wall time per run
and the largest absolute difference across all trace columns.
"""

import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

logging.getLogger("tswind").setLevel(logging.ERROR)

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), "src"))

from tswind import (AnalyticAeroMap, ObserverState, RATED_SPEED, RATED_TORQUE,
                    SimConfig, TurbineParams, WindScenario, run_closed_loop,
                    tabulate, trim_state)
from tswind.kernels import HAVE_COMPILED, available_backends


def scenarios():
    yield "constant 120 s", WindScenario(kind="constant", v_mean=18.0,
                                         duration=120.0)
    yield "gust 60 s", WindScenario(kind="eog", v_mean=18.0, gust_start=30.0,
                                    duration=60.0)
    yield "turbulent 120 s", WindScenario(kind="turbulent", v_mean=18.0,
                                          turbulence_intensity=0.1, seed=42,
                                          duration=120.0)


def time_run(cfg, backend, repeats=3):
    best = float("inf")
    trace = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        trace, _ = run_closed_loop(cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, trace


def main():
    params = TurbineParams()
    analytic = AnalyticAeroMap()
    x0 = replace(trim_state(18.0, RATED_SPEED, RATED_TORQUE, params, analytic),
                 theta_s=0.0)
    obs0 = ObserverState(0.1, 0.0, 0.0, 1.0)
    tab = tabulate(analytic, np.linspace(0.0, 22.0, 45),
                   np.linspace(0.0, 40.0, 41))

    print(f"backends available: {', '.join(available_backends())}")
    if not HAVE_COMPILED:
        print("compiled kernel not built; timing the reference loop only")
    header = f"{'scenario':<22} {'aeromap':<9} {'python':>10} {'compiled':>10} {'speedup':>8} {'max |diff|':>11}"
    print(header)
    print("-" * len(header))
    for name, sc in scenarios():
        for aero_name, aero in (("analytic", analytic), ("tabular", tab)):
            cfg = SimConfig(scenario=sc, initial_plant=x0,
                            initial_observer=obs0, aeromap=aero)
            t_py, tr_py = time_run(cfg, "python")
            if HAVE_COMPILED:
                t_c, tr_c = time_run(cfg, "compiled")
                diff = float(np.max(np.abs(tr_py.data - tr_c.data)))
                print(f"{name:<22} {aero_name:<9} {t_py * 1e3:9.1f}ms "
                      f"{t_c * 1e3:9.2f}ms {t_py / t_c:7.1f}x {diff:11.3e}")
            else:
                print(f"{name:<22} {aero_name:<9} {t_py * 1e3:9.1f}ms "
                      f"{'-':>10} {'-':>8} {'-':>11}")


if __name__ == "__main__":
    main()
