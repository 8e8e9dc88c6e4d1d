"""Command-line front end.

Subcommands::

    tswind simulate --config <file> --out <dir> [--backend auto|python|compiled]
    tswind design-gains [--weights <file>] --out <file> [--report <file>]
    tswind verify-stability [--gains <file|reference|synthesized>]
    tswind tower-stiffness [--tower <file>]
    tswind decompose-demo

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import kernels
from .config import load_sim_config
from .design import (build_weight_matrices, estimate_mismatch_bound,
                     format_design_report, is_hurwitz,
                     quadratic_certificate_search, synthesize_gains)
from .errors import NumericalError, SimulationDiverged, ValidationError
from .observer import (build_observer_matrices, save_gain_file,
                       ts_model_from_config)
from .aeromap import AnalyticAeroMap
from .params import TurbineParams
from .sim import emit_csv, resolve_gains, run_closed_loop
from .structural import default_tower, load_tower_file, stiffness_chain
from .tscore import build_pendulum_model, exactness_check, pendulum_system_matrix, ts_blend

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _load_weights_file(path):
    """key = value lines for w1..w4, r1..r3, theta_s_max, omega_max, v_max."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{ln}: expected key = value")
            key, _, val = line.partition("=")
            try:
                values[key.strip().lower()] = float(val)
            except ValueError as exc:
                raise ValidationError(f"{path}:{ln}: {exc}") from None
    known = {"w1", "w2", "w3", "w4", "r1", "r2", "r3",
             "theta_s_max", "omega_max", "v_max"}
    unknown = set(values) - known
    if unknown:
        raise ValidationError(f"{path}: unknown keys {sorted(unknown)}")
    from .design import (DEFAULT_NORMALIZERS, DEFAULT_OUTPUT_WEIGHTS,
                         DEFAULT_STATE_WEIGHTS)
    sw = tuple(values.get(f"w{i}", DEFAULT_STATE_WEIGHTS[i - 1]) for i in (1, 2, 3, 4))
    ow = tuple(values.get(f"r{i}", DEFAULT_OUTPUT_WEIGHTS[i - 1]) for i in (1, 2, 3))
    nz = (values.get("theta_s_max", DEFAULT_NORMALIZERS[0]),
          values.get("omega_max", DEFAULT_NORMALIZERS[1]),
          values.get("omega_max", DEFAULT_NORMALIZERS[2]),
          values.get("v_max", DEFAULT_NORMALIZERS[3]))
    return build_weight_matrices(sw, ow, nz)


def _cmd_simulate(args) -> int:
    config = load_sim_config(args.config)
    backend = None if args.backend == "auto" else args.backend
    os.makedirs(args.out, exist_ok=True)
    trace_path = os.path.join(args.out, f"{config.output_prefix}_trace.csv")
    metrics_path = os.path.join(args.out, f"{config.output_prefix}_metrics.txt")
    try:
        trace, metrics = run_closed_loop(config, backend=backend)
    except SimulationDiverged as exc:
        if exc.trace is not None and len(exc.trace):
            emit_csv(exc.trace, trace_path)
            print(f"diverged; partial trace written to {trace_path}",
                  file=sys.stderr)
        raise
    emit_csv(trace, trace_path)
    with open(metrics_path, "w", encoding="utf-8") as fh:
        fh.write(metrics.as_text())
    print(f"wrote {trace_path} ({len(trace)} rows, backend={trace.backend})")
    print(f"wrote {metrics_path}")
    print(metrics.as_text(), end="")
    return EXIT_OK


def _cmd_design_gains(args) -> int:
    weights = _load_weights_file(args.weights) if args.weights else build_weight_matrices()
    obs = build_observer_matrices(TurbineParams())
    design = synthesize_gains([obs.A1, obs.A2], obs.C, weights)
    report = format_design_report(weights, design, [obs.A1, obs.A2], obs.C)
    save_gain_file(args.out, design.L[0], design.L[1],
                   comment="observer correction gains, stationary Riccati design")
    print(f"wrote {args.out}")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report)
        print(f"wrote {args.report}")
    else:
        print(report, end="")
    return EXIT_OK


def _cmd_verify_stability(args) -> int:
    params = TurbineParams()
    aeromap = AnalyticAeroMap()
    obs = build_observer_matrices(params)
    L1, L2 = resolve_gains(args.gains, params)
    A_list = [obs.A1, obs.A2]
    L_list = [L1, L2]

    print("vertex Hurwitz check (closed loops A_i - L_i C):")
    all_hurwitz = True
    for i, (A, L) in enumerate(zip(A_list, L_list), start=1):
        M = A - L @ obs.C
        eig = np.linalg.eigvals(M)
        ok = is_hurwitz(M)
        all_hurwitz &= ok
        worst = float(np.max(eig.real))
        print(f"  vertex {i}: {'stable' if ok else 'NOT stable'} "
              f"(max Re eig = {worst:.6g})")
    mid = 0.5 * (A_list[0] - L_list[0] @ obs.C) + 0.5 * (A_list[1] - L_list[1] @ obs.C)
    print(f"  midpoint blend: {'stable' if is_hurwitz(mid) else 'NOT stable'}")

    model = ts_model_from_config(obs, params, aeromap)
    state_box = [(-0.02, 0.02), (0.0, 2.0), (0.0, 2.0), (1.0, 60.0)]
    input_box = [(0.0, 2.0 * 4.18e6), (1.0, 60.0)]
    mu = estimate_mismatch_bound(model, state_box, input_box,
                                 n_samples=2000, seed=7,
                                 extra_box=[(0.0, 30.0)])
    print(f"estimated premise-mismatch gain mu >= {mu:.6g}")
    search = quadratic_certificate_search(A_list, L_list, obs.C, mu)
    if search.feasible:
        print("quadratic certificate found: error dynamics formally verified")
    else:
        print(f"no quadratic certificate found over {search.tried} candidates "
              "(the condition is conservative; vertex stability above still holds)")
    return EXIT_OK if all_hurwitz else EXIT_NUMERICAL


def _cmd_tower_stiffness(args) -> int:
    tower = load_tower_file(args.tower) if args.tower else default_tower()
    omega1, B_total, k = stiffness_chain(tower)
    print(f"segments: {len(tower.segments)}, length {tower.length:.6g} m, "
          f"mass {tower.mass:.6g} kg, tip mass {tower.tip_mass:.6g} kg")
    print(f"first bending eigenfrequency: {omega1:.6g} rad/s "
          f"({omega1 / (2 * math.pi):.6g} Hz)")
    print(f"equivalent bending stiffness: {B_total:.6g} N m^2")
    print(f"equivalent tip spring constant: {k:.6g} N/m")
    return EXIT_OK


def _cmd_decompose_demo(args) -> int:
    m, l, g = 1.0, 1.0, 9.81
    model = build_pendulum_model(m, l, g)
    b = model.bounds[0]
    print("sector decomposition demo: torque-driven pendulum")
    print(f"  nonlinearity bounds: [{b.f_min:.6g}, {b.f_max:.6g}]")
    for i, sub in enumerate(model.submodels, start=1):
        print(f"  vertex {i} A = {sub.A.tolist()}")
    xs = np.linspace(-math.pi, math.pi, 1001)
    dev = exactness_check(model, lambda x, _: pendulum_system_matrix(float(x[0]), g, l),
                          [np.array([x, 0.0]) for x in xs])
    print(f"  max blend deviation over {xs.size} samples: {dev:.3e}")
    h = model.memberships_at(np.array([math.pi / 2, 0.0]))
    A_blend, _ = ts_blend(model, h)
    print(f"  memberships at angle pi/2: h = ({h[0]:.6f}, {h[1]:.6f}), "
          f"blended coupling entry {A_blend[1, 0]:.6f}")
    print(f"  simulation kernel backends available: {kernels.available_backends()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tswind",
        description="wind speed estimation: simulation, gain design, checks")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one closed-loop scenario")
    p.add_argument("--config", required=True, help="INI config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--backend", choices=("auto", "python", "compiled"),
                   default="auto")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("design-gains", help="synthesize observer gains")
    p.add_argument("--weights", help="key=value weight file (defaults built in)")
    p.add_argument("--out", required=True, help="gain file to write")
    p.add_argument("--report", help="write the design report here")
    p.set_defaults(fn=_cmd_design_gains)

    p = sub.add_parser("verify-stability", help="check gains and certificates")
    p.add_argument("--gains", default="reference",
                   help="gain file path, or 'reference'/'synthesized'")
    p.set_defaults(fn=_cmd_verify_stability)

    p = sub.add_parser("tower-stiffness", help="tower frequency/stiffness chain")
    p.add_argument("--tower", help="tower CSV (default: packaged 5 MW tower)")
    p.set_defaults(fn=_cmd_tower_stiffness)

    p = sub.add_parser("decompose-demo", help="sector decomposition walkthrough")
    p.set_defaults(fn=_cmd_decompose_demo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
