"""Initial velocity fields: ABC (Beltrami) flows and random band-limited data."""
from __future__ import annotations

import math

import numpy as np

from .lattice import (
    Lattice,
    SpectralField,
    forward,
    max_scaled_amplitude,
    mode_energy,
    project,
    symmetrize,
)

__all__ = [
    "abc_flow",
    "abc_physical",
    "single_mode",
    "random_band_limited",
    "project_into_trapping_set",
]


def abc_physical(lattice: Lattice, A=1.0, B=1.0, C=1.0, wavenumber=1.0) -> np.ndarray:
    """Arnold-Beltrami-Childress velocity samples; curl u = wavenumber * u."""
    x, y, z = lattice.grid()
    K = wavenumber
    return np.stack(
        [
            A * np.sin(K * z) + C * np.cos(K * y),
            B * np.sin(K * x) + A * np.cos(K * z),
            C * np.sin(K * y) + B * np.cos(K * x),
        ]
    )


def abc_flow(lattice: Lattice, A=1.0, B=1.0, C=1.0, wavenumber=1.0, t=0.0) -> SpectralField:
    """ABC flow as a spectral field.

    ``wavenumber`` must be a dual-lattice spacing multiple on every axis and lie
    inside the retained band, otherwise the field is not exactly representable.
    """
    for L in lattice.lengths:
        m = wavenumber * L / (2 * math.pi)
        if abs(m - round(m)) > 1e-12 or round(m) == 0:
            raise ValueError(f"wavenumber {wavenumber} is not on the dual lattice of {lattice}")
    if wavenumber >= lattice.k_cut:
        raise ValueError("ABC wavenumber lies outside the retained band")
    coeffs = forward(lattice, abc_physical(lattice, A, B, C, wavenumber))
    coeffs[:, ~lattice.retained] = 0.0
    return SpectralField(lattice, coeffs, t)


def single_mode(lattice: Lattice, kvec, amplitude, t=0.0) -> SpectralField:
    """Hermitian pair u_hat(k0) = amplitude, u_hat(-k0) = conj(amplitude).

    ``amplitude`` is a complex 3-vector; it is not projected.
    """
    c = lattice.zeros()
    idx = lattice.index_of(kvec)
    nidx = tuple((-i) % n for i, n in zip(idx, lattice.shape))
    amp = np.asarray(amplitude, dtype=complex)
    c[(slice(None),) + idx] = amp
    c[(slice(None),) + nidx] = np.conj(amp)
    if idx == nidx:
        c[(slice(None),) + idx] = amp.real
    return SpectralField(lattice, c, t)


def random_band_limited(
    lattice: Lattice,
    seed,
    band=(1.0, 4.0),
    energy=1.0,
    slope=0.0,
) -> SpectralField:
    """Divergence-free Gaussian field supported on ``band[0] <= |k| <= band[1]``.

    Built from real white noise so Hermitian symmetry is exact, weighted by
    ``|k|**slope`` and rescaled to the L2 energy ``sum |u_hat|**2 = energy``.
    """
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3,) + lattice.shape)
    c = forward(lattice, noise)
    kmag = lattice.kmag
    mask = lattice.retained & (kmag >= band[0]) & (kmag <= band[1])
    if not np.any(mask):
        raise ValueError(f"band {band} contains no retained modes")
    weight = np.where(mask, np.power(np.where(mask, kmag, 1.0), slope), 0.0)
    c = project(lattice, c * weight)
    c = symmetrize(c)
    e = math.fsum(mode_energy(c).ravel())
    if energy > 0:
        c *= math.sqrt(energy / e)
    else:
        c[:] = 0.0
    return SpectralField(lattice, c)


def project_into_trapping_set(f: SpectralField, R: float, R1: float) -> SpectralField:
    """Map ``f`` into A_{R1} intersected with the L2 ball B_R.

    Each mode is radially shrunk so that |k||u_hat(k)| <= R1, then the field
    is scaled down if its L2 norm exceeds R.  Both operations act on
    magnitudes only and so preserve solenoidality and Hermitian symmetry.
    """
    lat = f.lattice
    amp = lat.kmag * np.sqrt(mode_energy(f.coeffs))
    scale = np.ones_like(amp)
    over = amp > R1
    scale[over] = R1 / amp[over]
    c = f.coeffs * scale
    norm = math.sqrt(math.fsum(mode_energy(c).ravel()))
    if norm > R and norm > 0:
        c = c * (R / norm)
    out = SpectralField(lat, c, f.t)
    # the clip can land one ulp above R1; pull it back inside
    m = max_scaled_amplitude(out)
    if m > R1 > 0:
        out = SpectralField(lat, out.coeffs * (R1 / m) * (1 - 2e-16), f.t)
    return out
