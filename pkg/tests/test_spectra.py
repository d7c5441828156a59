import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kolmobounds import (
    EnergySpectrum,
    KolmogorovModel,
    Lattice,
    Solver,
    SpectralField,
    SpectrumWarning,
    abc_flow,
    dissipation_epsilon1,
    energy_spectrum,
    ensemble_average_spectrum,
    kolmogorov_EK,
    mode_energy,
    plancherel_energy,
    random_band_limited,
    single_mode,
    sobolev_norm,
    spectral_mass,
    time_average_spectrum,
)


def test_zero_field_zero_spectrum(lat8):
    s = energy_spectrum(SpectralField.zeros(lat8))
    assert not np.any(s.values)


def test_single_pair_lands_in_unit_bin(lat8):
    f = single_mode(lat8, (1.0, 0.0, 0.0), [0.0, 1.0, 0.0])
    s = energy_spectrum(f, 1.0)
    expect = np.zeros(s.n_bins)
    expect[1] = 2.0
    assert np.array_equal(s.values, expect)


@given(st.integers(0, 10_000), st.floats(0.3, 2.0))
def test_mass_identity_exact(seed, a):
    lat = Lattice((8, 8, 8), (2 * math.pi, 5.0, 7.0))
    f = random_band_limited(lat, seed, (0.3, 3.0), 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SpectrumWarning)
        s = energy_spectrum(f, a)
    m1, m2 = s.mass(), spectral_mass(f)
    assert abs(m1 - m2) <= 4 * np.spacing(m2)


def test_small_bin_width_warns(lat8):
    with pytest.warns(SpectrumWarning):
        energy_spectrum(random_band_limited(lat8, 1), 0.5)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        EnergySpectrum(0.0, np.ones(3))
    with pytest.raises(ValueError):
        EnergySpectrum(1.0, np.ones((2, 2)))


def test_time_average_of_stationary_series():
    s0 = EnergySpectrum(1.0, [1.0, 2.0, 3.0], window=(0, 0))
    series = [s0.with_values(s0.values, (t, t)) for t in (0.0, 0.5, 1.0)]
    avg = time_average_spectrum(series)
    assert np.allclose(avg.values, s0.values)
    assert avg.window == (0.0, 1.0)


def test_two_point_average_halves():
    a = EnergySpectrum(1.0, [2.0, 4.0], window=(0, 0))
    b = a.with_values([0.0, 0.0], (1.0, 1.0))
    assert np.array_equal(time_average_spectrum([a, b]).values, [1.0, 2.0])


def test_time_average_validation():
    a = EnergySpectrum(1.0, [1.0], window=(0, 0))
    with pytest.raises(ValueError):
        time_average_spectrum([a])
    with pytest.raises(ValueError):
        time_average_spectrum([a, a])
    b = a.with_values([1.0], (1.0, 1.0))
    with pytest.raises(ValueError):
        time_average_spectrum([a, b], T=0.5)
    c = EnergySpectrum(0.5, [1.0, 1.0], window=(2, 2))
    with pytest.raises(ValueError):
        time_average_spectrum([a, c])


def test_beltrami_time_average_closed_form(lat16):
    nu, T = 0.1, 1.0
    traj = Solver(abc_flow(lat16), nu, 0.01).run(100, 5)
    spectra = [energy_spectrum(f) for f in traj.fields]
    avg = time_average_spectrum(spectra)
    x = 2 * nu * T
    expect = (1 - math.exp(-x)) / x * spectra[0].values[1]
    # trapezoid on 21 checkpoints of an exponential: error ~ (dt^2/12) x^2
    assert avg.values[1] == pytest.approx(expect, rel=1e-4)


def test_ensemble_average_and_linearity(lat8):
    fields = [random_band_limited(lat8, s, (1, 2.7)) for s in range(4)]
    spectra = [energy_spectrum(f) for f in fields]
    avg = ensemble_average_spectrum(spectra)
    assert np.allclose(avg.values, np.mean([s.values for s in spectra], axis=0), rtol=0, atol=1e-15)
    # averaging commutes with binning
    mean_sq = np.mean([mode_energy(f.coeffs) for f in fields], axis=0)
    c = np.zeros((3,) + lat8.shape, dtype=complex)
    c[0] = np.sqrt(mean_sq)
    direct = energy_spectrum(SpectralField(lat8, c))
    assert np.allclose(avg.values, direct.values, rtol=1e-13, atol=0)
    with pytest.raises(ValueError):
        ensemble_average_spectrum([])


def test_kolmogorov_reference_values():
    assert kolmogorov_EK(KolmogorovModel(1.0, 1.0), 1.0) == 1.0
    m = KolmogorovModel(1.0, 1.0)
    assert m(8.0) / m(1.0) == pytest.approx(1 / 32, rel=1e-15)
    assert KolmogorovModel(1.0, 8.0)(3.0) / m(3.0) == pytest.approx(4.0, rel=1e-15)
    with pytest.raises(ValueError):
        m(0.0)
    with pytest.raises(ValueError):
        KolmogorovModel(0.0, 1.0)


def test_epsilon1_zero_and_single_bin():
    assert dissipation_epsilon1(EnergySpectrum(1.0, [0.0, 0.0]), 0.1) == 0.0
    # bins are centred at (j + 1/2) a, so a bin centred at kappa = 1 with mass E a = 2 needs a = 2
    single = EnergySpectrum(2.0, [1.0])
    assert dissipation_epsilon1(single, 0.3) == pytest.approx(0.3 * 2 / (2 * math.pi) ** 3)


def test_epsilon1_matches_beltrami_energy_decay(lat16):
    nu = 0.1
    f = abc_flow(lat16)
    with pytest.warns(SpectrumWarning):
        s = energy_spectrum(f, 0.005)
    eps1 = dissipation_epsilon1(s, nu)
    # d/dt ||u||^2 = -2 nu |k0|^2 ||u||^2 for the exact decay, |k0| = 1
    decay = 2 * nu * plancherel_energy(f)
    assert eps1 == pytest.approx(0.5 * decay / lat16.volume, rel=0.01)


def test_sobolev_norm_cases(lat16):
    assert sobolev_norm(EnergySpectrum(1.0, [0.0, 0.0]), 1.0) == 0.0
    f = abc_flow(lat16)
    s = energy_spectrum(f)
    assert sobolev_norm(s, 0.0) == pytest.approx(plancherel_energy(f), rel=1e-14)
    with pytest.warns(SpectrumWarning):
        fine = energy_spectrum(f, 0.01)
    assert sobolev_norm(fine, 1.0) == pytest.approx(2 * plancherel_energy(f), rel=0.011)
