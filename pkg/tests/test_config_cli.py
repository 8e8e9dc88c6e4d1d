import os

import numpy as np
import pytest

from tswind import ValidationError, load_gain_file, read_trace_csv
from tswind.cli import main
from tswind.config import load_sim_config

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
GUST_INI = os.path.join(REPO, "configs", "gust.ini")


# --- config parsing -----------------------------------------------------------

def test_shipped_config_parses():
    cfg = load_sim_config(GUST_INI)
    assert cfg.scenario.kind == "eog"
    assert cfg.scenario.v_mean == 18.0
    assert cfg.dt == 0.005
    assert cfg.gain_source == "reference"
    assert cfg.initial_observer.v_hat == 1.0
    assert cfg.output_prefix == "gust"


def test_config_defaults(tmp_path):
    p = tmp_path / "min.ini"
    p.write_text("[scenario]\nkind = constant\nduration = 5.0\n")
    cfg = load_sim_config(p)
    assert cfg.scenario.v_mean == 18.0
    assert cfg.vbar_mode == "fixed"
    assert cfg.controller.kp == 40.0
    assert cfg.initial_plant is None   # trim default


def test_config_unknown_key_rejected(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[scenario]\nkind = constant\nwindy = yes\n")
    with pytest.raises(ValidationError):
        load_sim_config(p)


def test_config_unknown_section_rejected(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[scenario]\nkind = constant\n[turbine]\nblades = 3\n")
    with pytest.raises(ValidationError):
        load_sim_config(p)


def test_config_bad_number_rejected(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[scenario]\nkind = constant\nv_mean = fast\n")
    with pytest.raises(ValidationError):
        load_sim_config(p)


def test_config_missing_file():
    with pytest.raises(ValidationError):
        load_sim_config("/nonexistent/nowhere.ini")


def test_config_initial_plant_partial(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[initial]\nomega_r = 1.2\nomega_g = 1.2\nbeta = 20.0\n")
    cfg = load_sim_config(p)
    assert cfg.initial_plant is not None
    assert cfg.initial_plant.omega_r == 1.2
    assert cfg.initial_plant.y_T == 0.0


# --- CLI ------------------------------------------------------------------------

def test_cli_simulate(tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["simulate", "--config", GUST_INI, "--out", str(out)])
    assert rc == 0
    trace = read_trace_csv(out / "gust_trace.csv")
    assert len(trace) == 12001
    metrics = (out / "gust_metrics.txt").read_text()
    assert "lag_v" in metrics
    assert "rmse_v" in metrics


def test_cli_simulate_backend_flag(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["simulate", "--config", GUST_INI, "--out", str(out_a),
                 "--backend", "python"]) == 0
    assert main(["simulate", "--config", GUST_INI, "--out", str(out_b)]) == 0
    a = (out_a / "gust_trace.csv").read_bytes()
    b = (out_b / "gust_trace.csv").read_bytes()
    assert a == b


def test_cli_simulate_bad_config_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[scenario]\nkind = hurricane\n")
    rc = main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_cli_simulate_divergence_exit_code(tmp_path, capsys):
    gains = tmp_path / "bad_gains.txt"
    from tswind import reference_gains, save_gain_file
    L1, L2 = reference_gains()
    save_gain_file(gains, -L1, -L2)
    ini = tmp_path / "c.ini"
    ini.write_text(f"[observer]\ngains = {gains}\n"
                   "[scenario]\nkind = constant\nduration = 20.0\n")
    out = tmp_path / "o"
    rc = main(["simulate", "--config", str(ini), "--out", str(out)])
    assert rc == 2
    # partial trace flushed for post-mortem work
    assert (out / "run_trace.csv").exists()


def test_cli_design_gains_round_trip(tmp_path, capsys):
    gains = tmp_path / "designed.txt"
    report = tmp_path / "report.txt"
    rc = main(["design-gains", "--out", str(gains), "--report", str(report)])
    assert rc == 0
    L1, L2 = load_gain_file(gains)
    assert np.array_equal(L1, L2)
    assert "closed-loop eigenvalues" in report.read_text()


def test_cli_design_gains_weight_file(tmp_path):
    wf = tmp_path / "w.txt"
    wf.write_text("w1 = 0.25\nw4 = 6e8  # heavier wind weighting\nr2 = 0.1571\n")
    gains = tmp_path / "g.txt"
    assert main(["design-gains", "--weights", str(wf), "--out", str(gains)]) == 0
    L1, _ = load_gain_file(gains)
    assert np.all(np.isfinite(L1))


def test_cli_design_gains_bad_weights(tmp_path, capsys):
    wf = tmp_path / "w.txt"
    wf.write_text("w9 = 1.0\n")
    rc = main(["design-gains", "--weights", str(wf),
               "--out", str(tmp_path / "g.txt")])
    assert rc == 1


def test_cli_verify_stability(capsys):
    rc = main(["verify-stability"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "vertex 1: stable" in out
    assert "vertex 2: stable" in out
    assert "no quadratic certificate" in out


def test_cli_verify_stability_gain_file(tmp_path, capsys):
    from tswind import reference_gains, save_gain_file
    L1, L2 = reference_gains()
    path = tmp_path / "g.txt"
    save_gain_file(path, L1, L2)
    assert main(["verify-stability", "--gains", str(path)]) == 0


def test_cli_tower_stiffness_default(capsys):
    rc = main(["tower-stiffness"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "first bending eigenfrequency" in out
    assert "2.14" in out


def test_cli_tower_stiffness_file(tmp_path, capsys):
    p = tmp_path / "tower.csv"
    p.write_text("tipmass,0.0\nlength,mu,EI\n50.0,2000.0,2e11\n")
    assert main(["tower-stiffness", "--tower", str(p)]) == 0
    assert "equivalent tip spring" in capsys.readouterr().out


def test_cli_tower_stiffness_missing_file(capsys):
    assert main(["tower-stiffness", "--tower", "/nope.csv"]) == 1


def test_cli_decompose_demo(capsys):
    rc = main(["decompose-demo"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "max blend deviation" in out
    assert "-9.81" in out
