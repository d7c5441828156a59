import math

import numpy as np
import pytest

from kolmobounds import (
    P_GRID,
    CubeCutoff,
    Forcing,
    ForcingModel,
    FilterRow,
    Lattice,
    Solver,
    SpectralField,
    abc_flow,
    check_filtered_conclusion,
    check_l2t_surrogate,
    check_lemma_hypothesis,
    e_p,
    f_p,
    hypothesis_R1,
    min_R1,
    mode_energy,
    random_band_limited,
    rows_to_csv,
    single_mode,
    smootherstep,
)


def test_smootherstep_profile():
    s = np.linspace(-0.5, 1.5, 41)
    v = smootherstep(s)
    assert v[0] == 0.0 and v[-1] == 1.0
    assert np.all(np.diff(v) >= 0)
    assert smootherstep(0.5) == pytest.approx(0.5)


def test_cutoff_rejects_wide_delta(lat16):
    kn = 3.0
    with pytest.raises(ValueError):
        CubeCutoff(lat16, (3.0, 0.0, 0.0), kn / (2 * math.sqrt(3)))
    with pytest.raises(ValueError):
        CubeCutoff(lat16, (3.0, 0.0, 0.0), 0.0)
    CubeCutoff(lat16, (3.0, 0.0, 0.0), 0.999 * kn / (2 * math.sqrt(3)))


@pytest.mark.parametrize("center", [(3.0, 0.0, 0.0), (2.0, 2.0, 1.0), (-4.0, 1.0, 2.0)])
def test_support_stays_in_annulus(center):
    lat = Lattice((32, 32, 32))
    kn = math.sqrt(sum(c * c for c in center))
    cut = CubeCutoff(lat, center, 0.999 * kn / (2 * math.sqrt(3)))
    xi = lat.kmag[cut.support]
    assert xi.size > 0
    assert np.all(xi >= kn / 2) and np.all(xi <= 1.5 * kn)
    assert np.all(cut.values <= 1.0) and np.all(cut.values >= 0.0)


def test_zero_field_all_p(lat16):
    cut = CubeCutoff(lat16, (3.0, 0.0, 0.0), 0.8)
    for p in P_GRID:
        assert e_p(SpectralField.zeros(lat16), cut, p) == 0.0


def test_single_mode_in_inner_cube(lat_aniso):
    lat = lat_aniso
    kvec = tuple(float(x) for x in lat.k[(slice(None), 2, 1, 1)])
    c = 0.37
    f = single_mode(lat, kvec, [0.0, 0.0, c])
    cut = CubeCutoff(lat, kvec, 0.3)
    assert cut.values[2, 1, 1] == 1.0
    for p in (2, 4, 8, 64):
        assert e_p(f, cut, p) == pytest.approx(c * lat.cell ** (1 / p), rel=1e-14)
    assert e_p(f, cut, math.inf) == pytest.approx(c, rel=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_large_p_approaches_sup(seed):
    lat = Lattice((32, 32, 32))
    f = random_band_limited(lat, seed, (1.0, 8.0), 1.0)
    cut = CubeCutoff(lat, (4.0, 0.0, 0.0), 1.1)
    e64, einf = e_p(f, cut, 64), e_p(f, cut, math.inf)
    assert einf <= e64 <= 1.01 * einf


def test_p_below_one_rejected(lat16, random_field):
    with pytest.raises(ValueError):
        e_p(random_field, CubeCutoff(lat16, (3.0, 0.0, 0.0), 0.8), 0.5)


def test_force_norms(lat16):
    cut = CubeCutoff(lat16, (2.0, 0.0, 0.0), 0.55)
    times = np.linspace(0, 1, 5)
    assert not np.any(f_p(None, cut, 2, times))
    steady = Forcing(ForcingModel("steady", (1.0, 3.0), 1.0, seed=2), lat16)
    vals = f_p(steady, cut, 4, times)
    assert np.all(vals == vals[0]) and vals[0] > 0
    stoch = Forcing(ForcingModel("stochastic", (1.0, 3.0), 1.0, seed=2), lat16)
    for t in (0.0, 0.3, 0.9):
        f2 = f_p(stoch, cut, 2, [t])[0]
        c = stoch(t)
        hm1 = math.sqrt(math.fsum((mode_energy(c) * lat16.inv_k2 * lat16.cell).ravel()))
        assert hm1 - f2 >= 0
    running = f_p(stoch, cut, 8, np.linspace(0, 2, 21))
    assert np.all(np.diff(running) >= 0)


def test_hypothesis_R1_and_check():
    R = np.array([1.0, 1.2, 0.8])
    fp = np.array([0.0, 0.1, 0.0])
    R1 = hypothesis_R1(R, fp, 0.1, 8.0, 0.5, 4)
    assert np.all(np.diff(R1) >= 0)
    ok, margin = check_lemma_hypothesis(R, fp, 0.1, 8.0, 0.5, 4, R1)
    assert ok and np.min(margin) >= -1e-15
    ok, _ = check_lemma_hypothesis(R, fp, 0.1, 8.0, 0.5, 4, 0.5 * R1)
    assert not ok
    inf = hypothesis_R1(R, fp, 0.1, 8.0, 0.5, math.inf)
    assert inf[0] == pytest.approx(6 * 1.0 / (math.sqrt(8.0) * 0.1))


def test_beltrami_filtered_conclusion(lat16):
    nu = 0.1
    traj = Solver(abc_flow(lat16), nu, 0.01).run(50, 10)
    R = math.sqrt(traj.energies[0])
    kv = (1.0, 0.0, 0.0)
    kn = 1.0
    cut = CubeCutoff(lat16, kv, 0.9 * kn / (2 * math.sqrt(3)))
    for p in (2, 4, 8, 64, math.inf):
        R1 = hypothesis_R1(np.full(len(traj), R), np.zeros(len(traj)), nu, lat16.volume, cut.delta, p)
        R1 = np.maximum(R1, kn * e_p(traj.fields[0], cut, p))
        ok_h, _ = check_lemma_hypothesis(np.full(len(traj), R), 0.0, nu, lat16.volume, cut.delta, p, R1)
        ok, e, margin = check_filtered_conclusion(traj.fields, cut, p, R1)
        assert ok_h and ok
        if p == 2:
            assert np.all(np.diff(e) < 0)
    R2 = 10.0
    ok, integral, bound = check_l2t_surrogate(traj.fields, cut, R2, nu)
    assert ok and integral <= bound


def test_rows_to_csv():
    rows = [FilterRow((1.0, 0.0, 0.0), 0.2, math.inf, 0.0, 0.5, 0.0, 1.0, 2.0)]
    lines = rows_to_csv(rows).splitlines()
    assert lines[0] == "k,delta,p,t,e_p,f_p,hypothesis_margin,conclusion_margin"
    assert lines[1].split(",")[2] == "inf"
