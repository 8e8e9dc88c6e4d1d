import numpy as np
import pytest

from tswind import (AnalyticAeroMap, CQ_MAX, CQ_MIN, TabularAeroMap,
                    ValidationError, load_aeromap_csv, save_aeromap_csv,
                    tabulate)


@pytest.fixture(scope="module")
def small_map():
    lam = [2.0, 4.0, 8.0]
    beta = [0.0, 10.0]
    cq = np.array([[0.010, 0.005],
                   [0.040, 0.020],
                   [0.0751, 0.030]])
    ct = np.array([[0.2, 0.1],
                   [0.5, 0.3],
                   [0.8, 0.4]])
    return TabularAeroMap(lam, beta, cq, ct)


def test_grid_node_identity(small_map):
    assert small_map.eval(4.0, 0.0) == (0.040, 0.5)
    assert small_map.eval(8.0, 10.0) == (0.030, 0.4)


def test_bilinear_midpoint(small_map):
    cq, ct = small_map.eval(3.0, 5.0)
    assert cq == pytest.approx(np.mean([0.010, 0.005, 0.040, 0.020]))
    assert ct == pytest.approx(np.mean([0.2, 0.1, 0.5, 0.3]))


def test_out_of_grid_clamps_to_boundary(small_map):
    assert small_map.eval(100.0, -5.0) == small_map.eval(8.0, 0.0)
    assert small_map.eval(-3.0, 50.0) == small_map.eval(2.0, 10.0)


def test_stored_torque_coefficients_are_clamped():
    m = TabularAeroMap([0, 1], [0, 1],
                       np.array([[0.5, 0.0], [0.0, 0.5]]),
                       np.array([[1.0, -2.0], [1.0, 1.0]]))
    assert m.cq.max() == CQ_MAX
    assert m.cq.min() == CQ_MIN
    assert m.ct.min() == 0.0


def test_non_monotone_grid_rejected_at_construction():
    with pytest.raises(ValidationError):
        TabularAeroMap([0.0, 2.0, 1.0], [0.0, 1.0],
                       np.zeros((3, 2)), np.zeros((3, 2)))
    with pytest.raises(ValidationError):
        TabularAeroMap([0.0, 1.0], [1.0, 1.0],
                       np.zeros((2, 2)), np.zeros((2, 2)))


def test_shape_mismatch_rejected():
    with pytest.raises(ValidationError):
        TabularAeroMap([0.0, 1.0], [0.0, 1.0],
                       np.zeros((2, 3)), np.zeros((2, 3)))


def test_analytic_peak_calibration(aeromap):
    # dense-grid search over the torque surface at zero pitch
    lams = np.linspace(0.05, 25.0, 200001)
    vals = np.array([aeromap.eval(l, 0.0)[0] for l in lams])
    i = int(np.argmax(vals))
    assert vals[i] == pytest.approx(CQ_MAX, rel=1e-6)
    assert lams[i] == pytest.approx(AnalyticAeroMap.LAMBDA_OPT, abs=2e-4)
    # the documented optimum evaluates inside the clamp bounds
    cq_star, _ = aeromap.eval(AnalyticAeroMap.LAMBDA_OPT, 0.0)
    assert CQ_MIN <= cq_star <= CQ_MAX


def test_analytic_clamps_and_positivity(aeromap):
    rng = np.random.default_rng(3)
    for _ in range(2000):
        lam = rng.uniform(-5.0, 40.0)
        beta = rng.uniform(-10.0, 60.0)
        cq, ct = aeromap.eval(lam, beta)
        assert CQ_MIN <= cq <= CQ_MAX
        assert ct >= 0.0
        assert np.isfinite(cq) and np.isfinite(ct)


def test_analytic_degenerate_corner(aeromap):
    cq, ct = aeromap.eval(0.0, 0.0)
    assert np.isfinite(cq) and np.isfinite(ct)
    assert CQ_MIN <= cq <= CQ_MAX


def test_csv_round_trip(tmp_path, small_map):
    path = tmp_path / "map.csv"
    save_aeromap_csv(path, small_map)
    loaded = load_aeromap_csv(path)
    assert np.array_equal(loaded.lam_grid, small_map.lam_grid)
    assert np.array_equal(loaded.cq, small_map.cq)
    assert np.array_equal(loaded.ct, small_map.ct)


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("lam,beta,cq,ct\n1,0,0.01,0.2\n")
    with pytest.raises(ValidationError):
        load_aeromap_csv(path)


def test_csv_rejects_ragged_grid(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("lambda,beta,cq,ct\n"
                    "1,0,0.01,0.2\n1,1,0.01,0.2\n2,0,0.02,0.3\n")
    with pytest.raises(ValidationError):
        load_aeromap_csv(path)


def test_tabulated_analytic_matches_on_nodes(aeromap):
    tab = tabulate(aeromap, np.linspace(0.0, 20.0, 41), np.linspace(0.0, 30.0, 31))
    for lam in (0.0, 5.0, 12.5, 20.0):
        for beta in (0.0, 11.0, 30.0):
            assert tab.eval(lam, beta)[0] == pytest.approx(
                aeromap.eval(lam, beta)[0], abs=1e-15)
