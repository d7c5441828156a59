import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kolmobounds import (
    GaugeError,
    Lattice,
    SpectralField,
    divergence_residual,
    from_physical,
    hermitian_residual,
    leray_project,
    physical_energy,
    plancherel_energy,
    project,
    random_band_limited,
    single_mode,
    symmetrize,
    to_physical,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite)


def test_leray_parallel_vector_is_removed():
    assert np.allclose(leray_project([1, 0, 0], [1, 0, 0]), 0)


def test_leray_orthogonal_vector_is_kept():
    assert np.array_equal(leray_project([1, 0, 0], [0, 1, 0]), [0, 1, 0])


def test_leray_diagonal_wavevector():
    assert np.allclose(leray_project([1, 1, 0], [1, 0, 0]), [0.5, -0.5, 0], atol=1e-16)


def test_leray_rejects_zero_mode():
    with pytest.raises(GaugeError):
        leray_project([0, 0, 0], [1, 0, 0])


def test_leray_idempotent_many_draws():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(10_000):
        k = rng.normal(size=3)
        z = rng.normal(size=3) + 1j * rng.normal(size=3)
        once = leray_project(k, z)
        worst = max(worst, float(np.max(np.abs(leray_project(k, once) - once))))
    assert worst <= 1e-14


@given(vec3, vec3)
def test_leray_output_orthogonal(k, z):
    k = np.array(k)
    if k @ k < 1e-6:
        return
    out = leray_project(k, np.array(z))
    assert abs(out @ k) <= 1e-12 * (1 + np.linalg.norm(z)) * np.linalg.norm(k)


def test_lattice_validation():
    with pytest.raises(ValueError):
        Lattice((7, 8, 8))
    with pytest.raises(ValueError):
        Lattice((8, 8, 8), (1.0, -1.0, 1.0))
    with pytest.raises(ValueError):
        Lattice((8, 8, 8), dealias="none")


def test_dual_cell_default_box(lat8):
    assert lat8.cell == pytest.approx(1.0)
    assert lat8.k_cut == pytest.approx(8 / 3)


def test_retained_modes_respect_index_bound(lat_aniso):
    lat = lat_aniso
    idx = np.argwhere(lat.retained)
    for ax in range(3):
        n = lat.shape[ax]
        signed = np.where(idx[:, ax] > n // 2, idx[:, ax] - n, idx[:, ax])
        assert np.all(np.abs(signed) < n / 3)
    assert not lat.retained[0, 0, 0]


def test_zero_field_round_trip(lat8):
    f = SpectralField.zeros(lat8)
    assert not np.any(to_physical(f))
    assert not np.any(from_physical(lat8, to_physical(f)).coeffs)


def test_single_mode_matches_plane_wave(lat8):
    k0 = (1.0, 2.0, 0.0)
    c = np.array([0.3 + 0.1j, -0.2j, 0.5])
    f = single_mode(lat8, k0, c)
    x = lat8.grid()
    phase = np.exp(1j * (k0[0] * x[0] + k0[1] * x[1] + k0[2] * x[2]))
    expect = 2 * (c[:, None, None, None] * phase).real / math.sqrt(lat8.volume)
    assert np.max(np.abs(to_physical(f) - expect)) <= 1e-14


@pytest.mark.parametrize("seed", range(5))
def test_round_trip_random_field(lat_aniso, seed):
    f = random_band_limited(lat_aniso, seed, (0.5, 3.0), 2.0)
    back = from_physical(lat_aniso, to_physical(f))
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-13 * np.max(np.abs(f.coeffs))


def test_plancherel_zero(lat8):
    assert plancherel_energy(SpectralField.zeros(lat8)) == 0.0


def test_plancherel_single_pair(lat_aniso):
    lat = lat_aniso
    kvec = tuple(lat.k[(slice(None),) + (1, 1, 0)])
    f = single_mode(lat, kvec, [1.0, 0.0, 0.0])
    expected = lat.volume / (2 * math.pi) ** 3 * 2 * lat.cell
    assert plancherel_energy(f) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("seed", range(3))
def test_plancherel_matches_grid_quadrature(lat_aniso, seed):
    f = random_band_limited(lat_aniso, seed, (0.5, 3.0), 1.5)
    assert plancherel_energy(f) == pytest.approx(physical_energy(f), rel=1e-13)


def test_divergence_residual_cases(lat8, random_field):
    assert divergence_residual(SpectralField.zeros(lat8)) == 0.0
    assert divergence_residual(random_field) <= 1e-12
    kvec = (1.0, 1.0, 0.0)
    long = single_mode(lat8, kvec, kvec)
    assert divergence_residual(long) == pytest.approx(1.0)


def test_projection_preserves_solenoidal_energy(random_field):
    f = random_field
    again = SpectralField(f.lattice, project(f.lattice, f.coeffs))
    assert plancherel_energy(again) == pytest.approx(plancherel_energy(f), rel=1e-14)


def test_hermitian_symmetry_preserved(lat_aniso):
    rng = np.random.default_rng(5)
    raw = rng.normal(size=(3,) + lat_aniso.shape) + 1j * rng.normal(size=(3,) + lat_aniso.shape)
    sym = symmetrize(raw)
    assert hermitian_residual(sym) == 0.0
    assert hermitian_residual(symmetrize(project(lat_aniso, sym))) == 0.0
    f = random_band_limited(lat_aniso, 1, (0.5, 3.0))
    assert hermitian_residual(from_physical(lat_aniso, to_physical(f)).coeffs) == 0.0


def test_spectral_field_rejects_wrong_shape(lat8):
    with pytest.raises(ValueError):
        SpectralField(lat8, np.zeros((3, 4, 4, 4), dtype=complex))
