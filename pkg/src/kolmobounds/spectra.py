"""Shell-summed energy spectra, their averages, and spectrum-derived quantities.

The spectral function on the torus is the annulus sum

    E(kappa_j) = (1/a) sum_{j a <= |k| < (j+1) a} |u_hat(k)|^2 |Gamma'|,

so ``sum_j E_j a`` equals the discrete mass ``sum_k |u_hat|^2 |Gamma'|``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .lattice import Lattice, SpectralField, mode_energy

__all__ = [
    "SpectrumWarning",
    "EnergySpectrum",
    "KolmogorovModel",
    "energy_spectrum",
    "time_average_spectrum",
    "ensemble_average_spectrum",
    "kolmogorov_EK",
    "dissipation_epsilon1",
    "sobolev_norm",
    "spectral_mass",
]


class SpectrumWarning(UserWarning):
    """Bin width finer than the dual lattice spacing; some bins will be empty."""


@dataclass(frozen=True, eq=False)
class EnergySpectrum:
    """Binned spectrum: ``values[j]`` is E on [j a, (j+1) a).

    ``window`` is ``(t, t)`` for an instantaneous spectrum and the averaging
    interval otherwise.  ``volume`` is the torus volume, needed by the norms.
    """

    a: float
    values: np.ndarray
    volume: float = (2 * math.pi) ** 3
    window: tuple[float, float] = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 1:
            raise ValueError("spectrum values must be one-dimensional")
        if not self.a > 0:
            raise ValueError("bin width must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "window", tuple(float(w) for w in self.window))

    @property
    def t(self) -> float:
        return self.window[1]

    @property
    def n_bins(self) -> int:
        return self.values.size

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 0.5) * self.a

    @property
    def lower_edges(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.a

    def mass(self) -> float:
        """sum_j E_j a."""
        return math.fsum(self.values * self.a)

    def compatible(self, other: "EnergySpectrum") -> bool:
        return self.a == other.a and self.n_bins == other.n_bins and self.volume == other.volume

    def with_values(self, values, window=None, **meta) -> "EnergySpectrum":
        return EnergySpectrum(
            self.a,
            values,
            self.volume,
            self.window if window is None else window,
            {**self.meta, **meta},
        )


@dataclass(frozen=True)
class KolmogorovModel:
    """E_K(kappa) = C0 eps**(2/3) kappa**(-5/3)."""

    C0: float = 1.0
    eps: float = 1.0

    def __post_init__(self):
        if not (self.C0 > 0 and self.eps > 0):
            raise ValueError("C0 and eps must be positive")

    @property
    def amplitude(self) -> float:
        return self.C0 * self.eps ** (2.0 / 3.0)

    def __call__(self, kappa):
        return kolmogorov_EK(self, kappa)


def spectral_mass(f: SpectralField) -> float:
    """sum_k |u_hat(k)|^2 |Gamma'|, accurately summed."""
    return math.fsum(mode_energy(f.coeffs).ravel() * f.lattice.cell)


def _bins(lattice: Lattice, a: float):
    sel = lattice.retained | (lattice.k2 == 0)
    j = np.floor(lattice.kmag[sel] / a).astype(np.int64)
    n_bins = int(math.floor(lattice.k_cut / a)) + 1
    return sel, j, n_bins


def energy_spectrum(f: SpectralField, a: float | None = None) -> EnergySpectrum:
    """Annulus-summed spectrum of ``f`` with bin width ``a``.

    ``a`` defaults to the smallest dual-lattice spacing.  Each bin total is
    accumulated with ``math.fsum`` so the mass identity holds to a few ulp.
    """
    lat = f.lattice
    if a is None:
        a = min(lat.dual_spacing)
    if not a > 0:
        raise ValueError("bin width must be positive")
    if a < min(lat.dual_spacing) * (1 - 1e-12):
        warnings.warn(
            f"bin width {a:g} is below the dual spacing {min(lat.dual_spacing):g}; "
            "empty bins are expected",
            SpectrumWarning,
            stacklevel=2,
        )
    sel, j, n_bins = _bins(lat, a)
    weights = mode_energy(f.coeffs)[sel] * lat.cell
    order = np.argsort(j, kind="stable")
    js, ws = j[order], weights[order]
    cuts = np.searchsorted(js, np.arange(n_bins + 1))
    totals = [math.fsum(ws[cuts[b] : cuts[b + 1]]) for b in range(n_bins)]
    return EnergySpectrum(a, np.array(totals) / a, lat.volume, (f.t, f.t))


def time_average_spectrum(spectra, T: float | None = None) -> EnergySpectrum:
    """Trapezoidal time average (1/(T - t0)) int_{t0}^{T} E dt over checkpoint spectra.

    ``T`` defaults to the last checkpoint time; checkpoints after ``T`` are ignored
    and ``T`` must coincide with a checkpoint.
    """
    spectra = list(spectra)
    if len(spectra) < 2:
        raise ValueError("time averaging needs at least two checkpoints")
    ref = spectra[0]
    for s in spectra[1:]:
        if not ref.compatible(s):
            raise ValueError("spectra have mismatched bins")
    times = np.array([s.t for s in spectra])
    if np.any(np.diff(times) <= 0):
        raise ValueError("checkpoint times must increase")
    if T is None:
        T = times[-1]
    stop = int(np.searchsorted(times, T, side="right"))
    if stop < 2 or not math.isclose(times[stop - 1], T, rel_tol=1e-12, abs_tol=1e-14):
        raise ValueError(f"T={T} is not a checkpoint time")
    vals = np.stack([s.values for s in spectra[:stop]])
    span = times[stop - 1] - times[0]
    avg = trapezoid(vals, times[:stop], axis=0) / span
    return ref.with_values(avg, (times[0], times[stop - 1]), averaged="time")


def ensemble_average_spectrum(spectra) -> EnergySpectrum:
    """Bin-wise arithmetic mean across realizations."""
    spectra = list(spectra)
    if not spectra:
        raise ValueError("need at least one realization")
    ref = spectra[0]
    for s in spectra[1:]:
        if not ref.compatible(s):
            raise ValueError("spectra have mismatched bins")
    vals = np.mean(np.stack([s.values for s in spectra]), axis=0)
    return ref.with_values(vals, averaged="ensemble", realizations=len(spectra))


def kolmogorov_EK(model: KolmogorovModel, kappa):
    """C0 eps**(2/3) kappa**(-5/3); raises for kappa <= 0."""
    k = np.asarray(kappa, dtype=float)
    if np.any(k <= 0):
        raise ValueError("E_K is defined for kappa > 0 only")
    out = model.amplitude * k ** (-5.0 / 3.0)
    return float(out) if out.ndim == 0 else out


def dissipation_epsilon1(spectrum: EnergySpectrum, nu: float) -> float:
    """Dissipation rate per volume, (nu/(2 pi)^3) int kappa^2 E dkappa, midpoint rule."""
    c = spectrum.centers
    return nu / (2 * math.pi) ** 3 * math.fsum(c * c * spectrum.values * spectrum.a)


def sobolev_norm(spectrum: EnergySpectrum, r: float) -> float:
    """||u||_{H^r}^2 = V/(2 pi)^3 int (kappa^2 + 1)^r E dkappa, midpoint rule."""
    c = spectrum.centers
    w = (c * c + 1.0) ** r
    return spectrum.volume / (2 * math.pi) ** 3 * math.fsum(w * spectrum.values * spectrum.a)
