import math

import numpy as np
import pytest

from tswind import (BeamSegment, KAPPA1, NumericalError, TowerModel,
                    ValidationError, clamped_free_determinant, default_tower,
                    equivalent_bending_stiffness, equivalent_spring_stiffness,
                    first_eigenfrequency, load_tower_file, save_tower_file,
                    stiffness_chain)


def uniform_tower(n=1, L=50.0, mu=2000.0, EI=2.0e11, tip=0.0):
    seg = L / n
    return TowerModel(tuple(BeamSegment(seg, mu, EI) for _ in range(n)), tip)


def test_uniform_cantilever_textbook_frequency():
    L, mu, EI = 50.0, 2000.0, 2.0e11
    expect = 1.8751040687 ** 2 * math.sqrt(EI / (mu * L ** 4))
    got = first_eigenfrequency(uniform_tower())
    assert got == pytest.approx(expect, abs=2e-6)


def test_multi_segment_split_matches_single():
    one = first_eigenfrequency(uniform_tower(n=1))
    many = first_eigenfrequency(uniform_tower(n=7))
    assert many == pytest.approx(one, abs=1e-5)


def test_stiffness_scaling_law():
    base = uniform_tower(tip=3.0e5)
    stiff = TowerModel(tuple(BeamSegment(s.length, s.mu, 2.0 * s.EI)
                             for s in base.segments), base.tip_mass)
    w1 = first_eigenfrequency(base)
    w2 = first_eigenfrequency(stiff)
    assert w2 == pytest.approx(math.sqrt(2.0) * w1, rel=1e-6)


def test_tip_mass_lowers_frequency():
    assert first_eigenfrequency(uniform_tower(tip=3.5e5)) \
        < first_eigenfrequency(uniform_tower())


def test_determinant_continuous_near_first_root():
    tower = default_tower()
    w1 = first_eigenfrequency(tower)
    ws = np.linspace(w1 - 0.2, w1 + 0.2, 400)
    ds = np.array([clamped_free_determinant(tower, w) for w in ws])
    # exactly one sign change around the root at this resolution
    assert int(np.sum(np.sign(ds[:-1]) != np.sign(ds[1:]))) == 1


def test_no_root_in_range_is_explicit():
    # stubby ultra-stiff beam: first mode far above the search ceiling
    t = TowerModel((BeamSegment(1.0, 10.0, 1.0e12),), 0.0)
    with pytest.raises(NumericalError):
        first_eigenfrequency(t)


def test_default_tower_description():
    tower = default_tower()
    assert len(tower.segments) == 11
    assert tower.length == pytest.approx(87.6, abs=1e-3)
    assert tower.mass == pytest.approx(347640.0, rel=1e-5)
    assert tower.tip_mass == 350000.0


def test_default_tower_frequency():
    w1 = first_eigenfrequency(default_tower())
    assert w1 == pytest.approx(2.1418, abs=5e-4)


def test_bending_stiffness_formula():
    assert equivalent_bending_stiffness(0.0, 3968.5) == 0.0
    got = equivalent_bending_stiffness(2.14, 347640.0 / 87.6)
    assert got == pytest.approx(4.44e11, rel=1e-2)
    one = equivalent_bending_stiffness(2.0, 1000.0)
    assert equivalent_bending_stiffness(2.0, 4000.0) == pytest.approx(4 * one)


def test_spring_stiffness_formula():
    assert equivalent_spring_stiffness(1.0, 1.0) == 3.0
    assert equivalent_spring_stiffness(4.44e11, 87.6) == pytest.approx(
        1.98e6, rel=2e-2)
    k1 = equivalent_spring_stiffness(1.0e11, 40.0)
    assert equivalent_spring_stiffness(1.0e11, 20.0) == pytest.approx(8 * k1)


def test_full_chain_reproduces_tower_spring_entry():
    omega1, B_total, k = stiffness_chain(default_tower())
    assert 2.08 <= omega1 <= 2.20
    assert B_total == pytest.approx(4.44e11, rel=0.01)
    assert k == pytest.approx(1.98e6, rel=0.02)


def test_kappa_constant():
    assert KAPPA1 == 1.423e-2


def test_tower_file_round_trip(tmp_path):
    tower = uniform_tower(n=3, tip=1.0e4)
    p = tmp_path / "tower.csv"
    save_tower_file(p, tower)
    loaded = load_tower_file(p)
    assert loaded.tip_mass == tower.tip_mass
    assert loaded.segments == tower.segments


def test_tower_file_validation(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("length,mu,EI\n1,2,3\n")
    with pytest.raises(ValidationError):
        load_tower_file(p)  # no tipmass line
    p.write_text("tipmass,100\nlength,mu,EI\n")
    with pytest.raises(ValidationError):
        load_tower_file(p)  # no segments
    p.write_text("tipmass,100\n1,2\n")
    with pytest.raises(ValidationError):
        load_tower_file(p)  # short row


def test_segment_validation():
    with pytest.raises(ValidationError):
        BeamSegment(0.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        TowerModel((), 0.0)
    with pytest.raises(ValidationError):
        TowerModel((BeamSegment(1.0, 1.0, 1.0),), -5.0)
