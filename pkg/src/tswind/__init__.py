"""Rotor-effective wind speed estimation for wind turbines.

A reduced-order nonlinear turbine model, its exact sector-nonlinearity
decomposition, a four-state disturbance observer reconstructing the
effective wind speed from drivetrain measurements, Riccati-based gain
design with quadratic-stability checking, wind scenario generators, a
tower stiffness reduction chain, and a closed-loop batch simulator with
CSV output.
"""

from .aeromap import (AnalyticAeroMap, CQ_MAX, CQ_MIN, TabularAeroMap,
                      load_aeromap_csv, save_aeromap_csv, tabulate)
from .design import (CertificateSearch, DesignWeights, EPS_DEFINITE,
                     GainDesign, StabilityCertificate, build_weight_matrices,
                     care_residual, care_solve, estimate_mismatch_bound,
                     format_design_report, is_hurwitz,
                     lyapunov_negativity_check, observer_lmi_check,
                     quadratic_certificate_search, synthesize_gains)
from .errors import (CareSolverError, NumericalError, SimulationDiverged,
                     TswindError, ValidationError)
from .kernels import DEFAULT_BACKEND, HAVE_COMPILED, available_backends
from .observer import (F_BOUND_MAX, F_BOUND_MIN, Measurement, ObserverConfig,
                       ObserverState, build_observer_matrices, load_gain_file,
                       nonlinear_system_matrix, observer_derivative,
                       observer_memberships, observer_premise,
                       reference_gains, save_gain_file, ts_model_from_config,
                       wind_relaxation_rate)
from .params import (LAMBDA_CAP, TurbineParams, V_FLOOR, V_HAT_MAX, V_HAT_MIN)
from .plant import (ControlInput, PlantState, aero_forces,
                    centrifugal_stiffness, plant_derivative, tip_speed_ratio,
                    trim_state)
from .sim import (ControllerSettings, MetricsReport, PIPitchController,
                  RATED_SPEED, RATED_TORQUE, SimConfig, SimTrace,
                  TRACE_COLUMNS, compute_lag, compute_metrics, decay_envelope,
                  emit_csv, read_trace_csv, resolve_gains, rk4_step,
                  run_closed_loop)
from .structural import (BeamSegment, KAPPA1, TowerModel,
                         clamped_free_determinant, default_tower,
                         equivalent_bending_stiffness,
                         equivalent_spring_stiffness, first_eigenfrequency,
                         load_tower_file, save_tower_file, stiffness_chain)
from .tscore import (SectorBounds, TSModel, TSSubmodel, build_pendulum_model,
                     build_ts_model, exactness_check, pendulum_nonlinearity,
                     pendulum_system_matrix, sector_weights, ts_blend)
from .wind import (SplitMix64, WindScenario, eog_speed, load_wind_file,
                   rolling_mean, sample_half_grid, turbulent_series)

__version__ = "0.1.0"
