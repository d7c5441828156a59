"""Periodic lattice geometry, Fourier normalization and solenoidal fields.

Coefficients use the volume-adapted transform

    u_hat(k) = V**-0.5 * integral exp(-i k.x) u(x) dx,

so that ``sum_k |u_hat(k)|**2`` equals the physical L2 energy ``int |u|**2 dx``
and ``|u_hat|**2`` carries units of (L/T)**2 L**3.  Arrays are stored densely
in FFT index order with shape ``(3, N1, N2, N3)`` (k3 fastest), Hermitian
redundancy kept explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "EPS_DIV",
    "GaugeError",
    "Lattice",
    "SpectralField",
    "leray_project",
    "project",
    "symmetrize",
    "reflect",
    "to_physical",
    "from_physical",
    "plancherel_energy",
    "physical_energy",
    "divergence_residual",
    "hermitian_residual",
    "max_scaled_amplitude",
    "mode_energy",
    "forward",
]

EPS_DIV = 1e-12


class GaugeError(ValueError):
    """Raised when an operation is asked to act on the k = 0 (mean flow) mode."""


@dataclass(frozen=True)
class Lattice:
    """Rectangular torus ``[0,L1) x [0,L2) x [0,L3)`` sampled on ``N1 x N2 x N3`` points.

    The retained (dealiased) mode set is the open ball ``0 < |k| < k_cut`` with
    ``k_cut = min_i 2 pi N_i / (3 L_i)``; every retained wavevector then has
    integer index ``|n_i| < N_i / 3`` so quadratic products are alias-free.
    """

    shape: tuple[int, int, int] = (32, 32, 32)
    lengths: tuple[float, float, float] = (2 * math.pi, 2 * math.pi, 2 * math.pi)
    dealias: str = "2/3-spherical"

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        lengths = tuple(float(x) for x in self.lengths)
        if len(shape) != 3 or len(lengths) != 3:
            raise ValueError("lattice needs exactly three axes")
        if any(n < 4 or n % 2 for n in shape):
            raise ValueError(f"resolutions must be even and >= 4, got {shape}")
        if any(not (x > 0) or not math.isfinite(x) for x in lengths):
            raise ValueError(f"periods must be positive, got {lengths}")
        if self.dealias != "2/3-spherical":
            raise ValueError(f"unknown dealias rule {self.dealias!r}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def cubic(cls, n: int, length: float = 2 * math.pi) -> "Lattice":
        return cls((n, n, n), (length, length, length))

    @property
    def volume(self) -> float:
        return self.lengths[0] * self.lengths[1] * self.lengths[2]

    @property
    def cell(self) -> float:
        """Dual cell volume |Gamma'| = (2 pi)**3 / V."""
        return (2 * math.pi) ** 3 / self.volume

    @property
    def n_points(self) -> int:
        return self.shape[0] * self.shape[1] * self.shape[2]

    @property
    def dual_spacing(self) -> tuple[float, float, float]:
        return tuple(2 * math.pi / L for L in self.lengths)

    @property
    def dx(self) -> tuple[float, float, float]:
        return tuple(L / n for L, n in zip(self.lengths, self.shape))

    @property
    def k_cut(self) -> float:
        return min(2 * math.pi * n / (3 * L) for n, L in zip(self.shape, self.lengths))

    @cached_property
    def k(self) -> np.ndarray:
        """Wavevectors, shape (3, N1, N2, N3)."""
        axes = [
            2 * math.pi / L * sfft.fftfreq(n, 1.0 / n)
            for n, L in zip(self.shape, self.lengths)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        out = np.stack(grids)
        out.setflags(write=False)
        return out

    @cached_property
    def k2(self) -> np.ndarray:
        k = self.k
        out = k[0] ** 2 + k[1] ** 2 + k[2] ** 2
        out.setflags(write=False)
        return out

    @cached_property
    def kmag(self) -> np.ndarray:
        out = np.sqrt(self.k2)
        out.setflags(write=False)
        return out

    @cached_property
    def retained(self) -> np.ndarray:
        """Boolean mask of retained modes (excludes k = 0)."""
        out = (self.kmag < self.k_cut) & (self.k2 > 0)
        out.setflags(write=False)
        return out

    @cached_property
    def inv_k2(self) -> np.ndarray:
        """1/|k|**2 with the k = 0 entry set to zero."""
        k2 = self.k2
        out = np.zeros_like(k2)
        np.divide(1.0, k2, out=out, where=k2 > 0)
        out.setflags(write=False)
        return out

    def grid(self) -> np.ndarray:
        """Physical sample points, shape (3, N1, N2, N3)."""
        axes = [np.arange(n) * L / n for n, L in zip(self.shape, self.lengths)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def index_of(self, kvec) -> tuple[int, int, int]:
        """Array index of the lattice wavevector ``kvec`` (must lie on the dual lattice)."""
        idx = []
        for kc, L, n in zip(kvec, self.lengths, self.shape):
            m = kc * L / (2 * math.pi)
            mi = int(round(m))
            if abs(m - mi) > 1e-9:
                raise ValueError(f"{tuple(kvec)} is not on the dual lattice")
            idx.append(mi % n)
        return tuple(idx)

    def zeros(self) -> np.ndarray:
        return np.zeros((3,) + self.shape, dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable snapshot of Fourier velocity coefficients on a lattice."""

    lattice: Lattice
    coeffs: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if c.shape != (3,) + self.lattice.shape:
            raise ValueError(
                f"coefficient shape {c.shape} does not match lattice {self.lattice.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def zeros(cls, lattice: Lattice, t: float = 0.0) -> "SpectralField":
        return cls(lattice, lattice.zeros(), t)

    def replace(self, coeffs=None, t=None) -> "SpectralField":
        return SpectralField(
            self.lattice,
            self.coeffs if coeffs is None else coeffs,
            self.t if t is None else t,
        )

    @property
    def amplitude(self) -> np.ndarray:
        """|u_hat(k)| per mode."""
        return np.sqrt(mode_energy(self.coeffs))

    def energy(self) -> float:
        return plancherel_energy(self)


def mode_energy(coeffs: np.ndarray) -> np.ndarray:
    """|u_hat(k)|**2 summed over the three components."""
    return (coeffs.real**2 + coeffs.imag**2).sum(axis=0)


def leray_project(k, z) -> np.ndarray:
    """Project the complex 3-vector ``z`` onto the plane orthogonal to ``k``."""
    k = np.asarray(k, dtype=float)
    z = np.asarray(z, dtype=complex)
    kk = float(k @ k)
    if kk == 0.0:
        raise GaugeError("Leray projector undefined at k = 0; zero the mean mode instead")
    return z - (z @ k) * k / kk


def project(lattice: Lattice, coeffs: np.ndarray) -> np.ndarray:
    """Apply the Leray projector mode-wise to a (3, N1, N2, N3) array; k = 0 is zeroed."""
    k = lattice.k
    kdotz = k[0] * coeffs[0] + k[1] * coeffs[1] + k[2] * coeffs[2]
    s = kdotz * lattice.inv_k2
    out = coeffs - k * s
    out[:, 0, 0, 0] = 0.0
    return out


def reflect(a: np.ndarray) -> np.ndarray:
    """Return ``b`` with ``b[..., n] = a[..., -n mod N]`` over the last three axes."""
    axes = (-3, -2, -1)
    return np.roll(np.flip(a, axis=axes), 1, axis=axes)


def symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Hermitian part ``(a(k) + conj(a(-k))) / 2``; the result is exactly Hermitian."""
    return 0.5 * (coeffs + np.conj(reflect(coeffs)))


def hermitian_residual(coeffs: np.ndarray) -> float:
    """max |a(-k) - conj(a(k))|, exactly zero for a symmetrized array."""
    return float(np.max(np.abs(reflect(coeffs) - np.conj(coeffs)), initial=0.0))


def to_physical(f: SpectralField | tuple) -> np.ndarray:
    """Physical samples u(x_j) = V**-0.5 sum_k u_hat(k) exp(i k.x_j)."""
    lattice, coeffs = (f.lattice, f.coeffs) if isinstance(f, SpectralField) else f
    scale = lattice.n_points / math.sqrt(lattice.volume)
    return sfft.ifftn(coeffs, axes=(-3, -2, -1)).real * scale


def from_physical(lattice: Lattice, samples: np.ndarray, t: float = 0.0) -> SpectralField:
    """Inverse of :func:`to_physical` for real samples of shape (3, N1, N2, N3)."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (3,) + lattice.shape:
        raise ValueError(f"sample shape {samples.shape} does not match lattice {lattice.shape}")
    return SpectralField(lattice, forward(lattice, samples), t)


def forward(lattice: Lattice, samples: np.ndarray) -> np.ndarray:
    scale = math.sqrt(lattice.volume) / lattice.n_points
    return symmetrize(sfft.fftn(samples, axes=(-3, -2, -1)) * scale)


def plancherel_energy(f: SpectralField) -> float:
    """||u||_{L2}**2 = V/(2 pi)**3 * sum_k |u_hat|**2 |Gamma'|."""
    lat = f.lattice
    return lat.volume / (2 * math.pi) ** 3 * math.fsum(
        mode_energy(f.coeffs).ravel() * lat.cell
    )


def physical_energy(f: SpectralField) -> float:
    """Trapezoidal (equivalently rectangle) quadrature of int |u|**2 dx on the grid."""
    u = to_physical(f)
    w = f.lattice.volume / f.lattice.n_points
    return float(np.sum(u * u) * w)


def divergence_residual(f: SpectralField) -> float:
    """max_k |k . u_hat(k)| / (|k| |u_hat(k)|) over nonzero modes; 0 for the zero field."""
    lat = f.lattice
    c = f.coeffs
    kdotu = np.abs(lat.k[0] * c[0] + lat.k[1] * c[1] + lat.k[2] * c[2])
    denom = lat.kmag * np.sqrt(mode_energy(c))
    ok = denom > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(kdotu[ok] / denom[ok]))


def max_scaled_amplitude(f: SpectralField) -> float:
    """sup_{k != 0} |k| |u_hat(k)|, the quantity bounded by the trapping sets."""
    return float(np.max(f.lattice.kmag * np.sqrt(mode_energy(f.coeffs))))
