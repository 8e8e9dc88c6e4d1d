import os
import sys

import pytest

_SRC = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src")
if _SRC not in sys.path:
    sys.path.insert(0, _SRC)

from tswind import (AnalyticAeroMap, ObserverState, SimConfig, TurbineParams,
                    WindScenario, build_observer_matrices, reference_gains,
                    trim_state, RATED_SPEED, RATED_TORQUE)  # noqa: E402


@pytest.fixture(scope="session")
def params():
    return TurbineParams()


@pytest.fixture(scope="session")
def aeromap():
    return AnalyticAeroMap()


@pytest.fixture(scope="session")
def observer_config(params):
    return build_observer_matrices(params)


@pytest.fixture(scope="session")
def gained_config(observer_config):
    L1, L2 = reference_gains()
    return observer_config.with_gains(L1, L2)


@pytest.fixture(scope="session")
def trim18(params, aeromap):
    return trim_state(18.0, RATED_SPEED, RATED_TORQUE, params, aeromap)


@pytest.fixture(scope="session")
def fig_run(params, aeromap, trim18):
    """Constant 18 m/s run from the demonstration initial conditions.

    Shared by several tests; the plant starts at trim with zero torsion,
    the observer with a large initial error (0.1 rad, zero speeds, 1 m/s).
    """
    from dataclasses import replace

    from tswind import run_closed_loop

    x0 = replace(trim18, theta_s=0.0)
    cfg = SimConfig(
        scenario=WindScenario(kind="constant", v_mean=18.0, duration=120.0),
        initial_plant=x0,
        initial_observer=ObserverState(0.1, 0.0, 0.0, 1.0),
    )
    trace, metrics = run_closed_loop(cfg)
    return cfg, trace, metrics
