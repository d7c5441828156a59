"""Galerkin Navier-Stokes evolution of Fourier velocity coefficients.

The truncated system is

    d/dt u_hat(k) = -nu |k|^2 u_hat(k) + N(u_hat)_k + f_hat(k, t),
    N(u_hat)_k    = -i P_k [k . (1/sqrt(V)) sum_{k1} u_hat(k - k1) (x) u_hat(k1)],

with P_k the Leray projector.  N is evaluated pseudo-spectrally in divergence
form; on the 2/3-dealiased mode set this reproduces the convolution exactly.
Time stepping uses the three-stage strong-stability-preserving Runge-Kutta
scheme on the integrating-factor variable exp(nu |k|^2 t) u_hat, which makes
pure viscous decay exact.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .forcing import Forcing, ForceStats
from .lattice import Lattice, SpectralField, mode_energy, project, symmetrize

__all__ = [
    "CFLError",
    "BlowupError",
    "ResolutionWarning",
    "SolverState",
    "Trajectory",
    "Solver",
    "nonlinear_term",
    "rhs",
    "step",
    "cfl_limit",
    "recover_pressure",
    "pressure_tendency",
    "energy_inequality_residual",
    "energy_residual_series",
    "enstrophy",
    "top_shell_fraction",
]

_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


class CFLError(ValueError):
    """Raised when the requested step exceeds the advective stability limit."""


class BlowupError(FloatingPointError):
    """Raised when a non-finite coefficient appears; carries the last good state."""

    def __init__(self, message, last_good):
        super().__init__(message)
        self.last_good = last_good


class ResolutionWarning(UserWarning):
    """Energy is piling up in the outermost retained shell."""


def _unpack(f):
    if isinstance(f, SpectralField):
        return f.lattice, f.coeffs
    return f


def _hermitian_fill(lattice: Lattice, half: np.ndarray) -> np.ndarray:
    """Full (3, N1, N2, N3) array from the rfft half-spectrum of a real field."""
    n1, n2, n3 = lattice.shape
    h = half.shape[-1]
    out = np.empty((3,) + lattice.shape, dtype=complex)
    out[..., :h] = half
    if n3 > h:
        i1 = (-np.arange(n1)) % n1
        i2 = (-np.arange(n2)) % n2
        i3 = n3 - np.arange(h, n3)
        out[..., h:] = np.conj(half[:, i1][:, :, i2][..., i3])
    return out


def _real_samples(lattice: Lattice, coeffs: np.ndarray) -> np.ndarray:
    """Physical samples of a Hermitian coefficient array via the half-spectrum transform."""
    n = lattice.shape
    h = n[2] // 2 + 1
    return sfft.irfftn(coeffs[..., :h], s=n, axes=(-3, -2, -1)) * (lattice.n_points / math.sqrt(lattice.volume))


def _stress_divergence(lattice: Lattice, coeffs: np.ndarray) -> np.ndarray:
    """C_hat(k) = hat of div(u (x) u) = sum_j i k_j hat(u_j u_l), unprojected.

    Uses real transforms on the half spectrum; ``coeffs`` must be Hermitian.
    """
    n = lattice.shape
    h = n[2] // 2 + 1
    axes = (-3, -2, -1)
    u = _real_samples(lattice, coeffs)
    scale = math.sqrt(lattice.volume) / lattice.n_points
    k = lattice.k[..., :h]
    half = np.zeros((3,) + n[:2] + (h,), dtype=complex)
    for j, l in _PAIRS:
        prod = sfft.rfftn(u[j] * u[l], axes=axes) * scale
        half[l] += 1j * k[j] * prod
        if j != l:
            half[j] += 1j * k[l] * prod
    half[:, ~lattice.retained[..., :h]] = 0.0
    return _hermitian_fill(lattice, half)


def nonlinear_term(f) -> np.ndarray:
    """Projected convective tendency N(u_hat) on the retained modes.

    Accepts a :class:`SpectralField` or a ``(lattice, coeffs)`` pair and returns
    a coefficient array of the same shape.
    """
    lattice, coeffs = _unpack(f)
    if not np.any(coeffs):
        return np.zeros_like(coeffs)
    return symmetrize(-project(lattice, _stress_divergence(lattice, coeffs)))


def rhs(f, nu: float, force=None, nonlinear: bool = True) -> np.ndarray:
    """Full tendency X(u)_k = -nu |k|^2 u_hat + N(u_hat) + f_hat.

    ``force`` is a coefficient array (or None for f = 0).  With ``nonlinear``
    off, only the linear Stokes part is returned.
    """
    lattice, coeffs = _unpack(f)
    out = -nu * lattice.k2 * coeffs
    if nonlinear:
        out = out + nonlinear_term((lattice, coeffs))
    if force is not None:
        out = out + force
    return out


def recover_pressure(f) -> np.ndarray:
    """Pressure coefficients p_hat(k) with p_hat(0) = 0.

    The pressure gradient i k p_hat(k) is the longitudinal part of the
    unprojected tendency -C_hat, so p_hat = i (k . C_hat) / |k|^2.
    """
    lattice, coeffs = _unpack(f)
    c = _stress_divergence(lattice, coeffs)
    k = lattice.k
    kdotc = k[0] * c[0] + k[1] * c[1] + k[2] * c[2]
    return 1j * kdotc * lattice.inv_k2


def pressure_tendency(f) -> tuple[np.ndarray, np.ndarray]:
    """Return (unprojected convective tendency, pressure gradient i k p_hat)."""
    lattice, coeffs = _unpack(f)
    c = _stress_divergence(lattice, coeffs)
    p = recover_pressure((lattice, coeffs))
    return -c, 1j * lattice.k * p


def enstrophy(f) -> float:
    """||grad u||^2 = sum_k |k|^2 |u_hat|^2 (in units where sum |u_hat|^2 = ||u||^2)."""
    lattice, coeffs = _unpack(f)
    return math.fsum((lattice.k2 * mode_energy(coeffs)).ravel())


def top_shell_fraction(f) -> float:
    """Fraction of the energy held in the outermost dual-spacing shell below k_cut."""
    lattice, coeffs = _unpack(f)
    e = mode_energy(coeffs)
    total = e.sum()
    if total == 0:
        return 0.0
    top = lattice.retained & (lattice.kmag >= lattice.k_cut - min(lattice.dual_spacing))
    return float(e[top].sum() / total)


def cfl_limit(f, safety: float = 0.5) -> float:
    """Largest admissible dt = safety * min(dx) / max|u|; inf for the zero field."""
    umax = float(np.max(np.abs(_real_samples(f.lattice, f.coeffs))))
    if umax == 0.0:
        return math.inf
    return safety * min(f.lattice.dx) / umax


def _exp_moments(x: np.ndarray) -> list[np.ndarray]:
    """m_n(x) = int_0^1 s**n exp(-x s) ds for n = 0..3."""
    small = x < 1.0
    xs = np.where(small, 1.0, x)
    e = np.exp(-xs)
    rec = [-np.expm1(-xs) / xs]
    for n in range(1, 4):
        rec.append((n * rec[-1] - e) / xs)
    # alternating Taylor series, accurate to round-off for x < 1
    xt = np.where(small, x, 0.0)
    ser = [np.zeros_like(x) for _ in range(4)]
    term = np.ones_like(x)
    for m in range(22):
        for n in range(4):
            ser[n] += term / (m + n + 1)
        term = term * (-xt) / (m + 1)
    return [np.where(small, s, r) for s, r in zip(ser, rec)]


def _dissipation_weights(x: np.ndarray) -> tuple[np.ndarray, ...]:
    """Cubic Hermite weights for int_0^h nu|k|^2 |u_hat|^2 ds in the integrating-factor frame.

    Write |u_hat(s)|^2 = exp(-x s/h) G(s) with x = 2 nu |k|^2 h.  G and its
    derivative G' = exp(x s/h) 2 Re(conj(u_hat) . T), T the non-viscous
    tendency, are known at both ends; G is interpolated by the cubic Hermite
    polynomial and the exponential integrated exactly.  The returned weights
    multiply, in order, |u0|^2, h*2Re(u0.T0), |u1|^2, h*2Re(u1.T1).

    Pure viscous decay (G constant) is integrated exactly.
    """
    m0, m1, m2, m3 = _exp_moments(x)
    half = 0.5 * x
    ex = np.exp(x)
    return (
        half * (2 * m3 - 3 * m2 + m0),
        half * (m3 - 2 * m2 + m1),
        half * (-2 * m3 + 3 * m2) * ex,
        half * (m3 - m2) * ex,
    )


_WEIGHT_CACHE: dict = {}


def _cached_weights(lat: Lattice, nu: float, dt: float):
    key = (lat.shape, lat.lengths, float(nu), float(dt))
    w = _WEIGHT_CACHE.get(key)
    if w is None:
        if len(_WEIGHT_CACHE) > 16:
            _WEIGHT_CACHE.clear()
        w = _dissipation_weights(np.minimum(2 * nu * lat.k2 * dt, 2.0))
        _WEIGHT_CACHE[key] = w
    return w


def _budget_increments(lat, nu, dt, u0, t0, u1, t1, forcing, t):
    """Dissipated energy and force work over one step, both fourth order in dt."""
    k2 = lat.k2
    x = 2 * nu * k2 * dt
    e0, e1 = mode_energy(u0), mode_energy(u1)
    d0 = 2 * (np.conj(u0) * t0).real.sum(axis=0)
    d1 = 2 * (np.conj(u1) * t1).real.sum(axis=0)
    w = _cached_weights(lat, nu, dt)
    smooth = w[0] * e0 + w[1] * dt * d0 + w[2] * e1 + w[3] * dt * d1
    # stiff modes: corrected trapezoid on the raw |u_hat|^2
    g0 = -2 * nu * k2 * e0 + d0
    g1 = -2 * nu * k2 * e1 + d1
    stiff = nu * k2 * (0.5 * dt * (e0 + e1) + dt * dt / 12 * (g0 - g1))
    ediss = math.fsum(np.where(x > 2.0, stiff, smooth).ravel())
    if forcing is None:
        return ediss, 0.0
    f0, f1 = forcing(t), forcing(t + dt)
    p0 = float(np.sum((np.conj(u0) * f0).real))
    p1 = float(np.sum((np.conj(u1) * f1).real))
    q0 = float(np.sum((np.conj(t0 - nu * k2 * u0) * f0).real + (np.conj(u0) * forcing.rate(t)).real))
    q1 = float(
        np.sum((np.conj(t1 - nu * k2 * u1) * f1).real + (np.conj(u1) * forcing.rate(t + dt, "left")).real)
    )
    work = 0.5 * dt * (p0 + p1) + dt * dt / 12 * (q0 - q1)
    return ediss, work


@dataclass(frozen=True, eq=False)
class SolverState:
    """Snapshot of the stepper: field, viscosity and integrated energy budget.

    ``dissipation`` is D(t) = nu int_0^t ||grad u||^2 ds and ``work`` is
    W(t) = int_0^t int u . f dx ds.
    """

    field: SpectralField
    nu: float
    dissipation: float = 0.0
    work: float = 0.0
    steps: int = 0
    dt: float = 0.0
    tendency: np.ndarray | None = field(default=None, repr=False)

    @property
    def t(self) -> float:
        return self.field.t

    @property
    def lattice(self) -> Lattice:
        return self.field.lattice


def step(
    state: SolverState,
    dt: float,
    forcing: Forcing | None = None,
    *,
    nonlinear: bool = True,
    cfl_safety: float | None = 0.5,
) -> SolverState:
    """Advance one integrating-factor SSP-RK3 step.

    Raises
    ------
    CFLError
        If ``dt`` exceeds ``cfl_safety * min(dx) / max|u|`` (skip with None).
    BlowupError
        If the new coefficients are not finite.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    f0 = state.field
    lat = f0.lattice
    nu = state.nu
    if cfl_safety is not None and nonlinear:
        lim = cfl_limit(f0, cfl_safety)
        if dt > lim:
            raise CFLError(
                f"dt={dt:.3e} exceeds the CFL limit {lim:.3e} at t={f0.t:.6g} "
                f"(safety {cfl_safety}, max|u| from physical samples)"
            )
    t = f0.t
    u = f0.coeffs
    k2 = lat.k2
    e_full = np.exp(-nu * k2 * dt)
    e_half = np.exp(-nu * k2 * (dt / 2))
    e_back = np.exp(nu * k2 * (dt / 2))

    def tend(c, s):
        out = nonlinear_term((lat, c)) if nonlinear else np.zeros_like(c)
        if forcing is not None:
            out = out + forcing(s)
        return out

    t0 = state.tendency if state.tendency is not None else tend(u, t)
    u1 = e_full * (u + dt * t0)
    u2 = 0.75 * e_half * u + 0.25 * e_back * (u1 + dt * tend(u1, t + dt))
    u3 = (1.0 / 3.0) * e_full * u + (2.0 / 3.0) * e_half * (u2 + dt * tend(u2, t + dt / 2))
    u3[:, ~lat.retained] = 0.0
    u3 = symmetrize(project(lat, u3))
    if not np.all(np.isfinite(u3)):
        raise BlowupError(f"non-finite coefficients after step at t={t:.6g}", state)
    t3 = tend(u3, t + dt)

    ediss, work = _budget_increments(lat, nu, dt, u, t0, u3, t3, forcing, t)
    new_field = SpectralField(lat, u3, t + dt)
    return SolverState(
        new_field,
        nu,
        state.dissipation + ediss,
        state.work + work,
        state.steps + 1,
        dt,
        t3,
    )


@dataclass
class Trajectory:
    """Checkpointed run history together with the integrated diagnostics.

    Parallel lists indexed by checkpoint: ``fields``, ``dissipation``,
    ``work``, ``force_sup`` (running max over step times of
    sup_k |f_hat(k,s)|/|k|) and ``force_F2`` (F^2 at the checkpoint).
    """

    lattice: Lattice
    nu: float
    fields: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    work: list = field(default_factory=list)
    force_sup: list = field(default_factory=list)
    force_F2: list = field(default_factory=list)
    force_Finf: list = field(default_factory=list)
    force_stats: ForceStats | None = None
    forcing: Forcing | None = None
    dt: float = 0.0
    warnings: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([f.t for f in self.fields])

    @property
    def energies(self) -> np.ndarray:
        """||u(t)||^2 at each checkpoint."""
        return np.array([math.fsum(mode_energy(f.coeffs).ravel()) for f in self.fields])

    def __len__(self) -> int:
        return len(self.fields)

    @property
    def final(self) -> SpectralField:
        return self.fields[-1]

    def record(self, state: SolverState, stats: ForceStats | None) -> None:
        self.fields.append(state.field)
        self.dissipation.append(state.dissipation)
        self.work.append(state.work)
        if stats is None:
            self.force_sup.append(0.0)
            self.force_F2.append(0.0)
            self.force_Finf.append(0.0)
        else:
            self.force_sup.append(stats.sup_ratio)
            self.force_F2.append(stats.F_squared())
            self.force_Finf.append(stats.F_inf())


class Solver:
    """Stateful driver around :func:`step` that records a :class:`Trajectory`.

    Parameters
    ----------
    initial : SpectralField
        Divergence-free, dealiased initial data.
    nu : float
        Kinematic viscosity (nu = 0 runs the inviscid Galerkin system).
    dt : float
        Fixed step.
    forcing : Forcing, optional
    nonlinear : bool
        Switch the convective term off for linear (Stokes) runs.
    cfl_safety : float or None
        CFL factor; None disables the check.
    resolution_threshold : float
        Warn when the outermost retained shell holds more than this energy fraction.
    """

    def __init__(
        self,
        initial: SpectralField,
        nu: float,
        dt: float,
        forcing: Forcing | None = None,
        *,
        nonlinear: bool = True,
        cfl_safety: float | None = 0.5,
        resolution_threshold: float = 0.01,
    ):
        if nu < 0:
            raise ValueError("viscosity must be nonnegative")
        if not dt > 0:
            raise ValueError("dt must be positive")
        lat = initial.lattice
        c = np.array(initial.coeffs)
        c[:, ~lat.retained] = 0.0
        self.state = SolverState(SpectralField(lat, symmetrize(project(lat, c)), initial.t), nu, dt=dt)
        self.dt = dt
        self.forcing = forcing
        self.nonlinear = nonlinear
        self.cfl_safety = cfl_safety
        self.resolution_threshold = resolution_threshold
        self.stats = None
        if forcing is not None:
            self.stats = ForceStats(lat)
            self.stats.start(forcing(initial.t))
        self._warned = False

    def advance(self) -> SolverState:
        new = step(
            self.state,
            self.dt,
            self.forcing,
            nonlinear=self.nonlinear,
            cfl_safety=self.cfl_safety,
        )
        if self.stats is not None:
            self.stats.update(self.forcing(new.t), self.dt)
        self.state = new
        return new

    def run(self, n_steps: int, checkpoint_every: int = 1) -> Trajectory:
        """Take ``n_steps`` steps, checkpointing the initial state and every
        ``checkpoint_every`` steps (the last step is always recorded)."""
        if checkpoint_every < 1:
            raise ValueError("checkpoint cadence must be >= 1")
        traj = Trajectory(
            self.state.lattice,
            self.state.nu,
            forcing=self.forcing,
            force_stats=self.stats,
            dt=self.dt,
        )
        traj.record(self.state, self.stats)
        for i in range(1, n_steps + 1):
            self.advance()
            if i % checkpoint_every == 0 or i == n_steps:
                traj.record(self.state, self.stats)
                self._check_resolution(traj)
        return traj

    def _check_resolution(self, traj: Trajectory) -> None:
        frac = top_shell_fraction(self.state.field)
        if frac > self.resolution_threshold and not self._warned:
            msg = (
                f"{100 * frac:.2f}% of the energy sits in the top retained shell at "
                f"t={self.state.t:.4g}; the run may be under-resolved"
            )
            traj.warnings.append(msg)
            warnings.warn(msg, ResolutionWarning, stacklevel=3)
            self._warned = True


def energy_residual_series(traj: Trajectory) -> np.ndarray:
    """Signed residual 1/2 ||u(t)||^2 + D(t) - W(t) - 1/2 ||u(0)||^2 per checkpoint."""
    e = traj.energies
    d = np.asarray(traj.dissipation)
    w = np.asarray(traj.work)
    return 0.5 * e + d - w - 0.5 * e[0]


def energy_inequality_residual(traj: Trajectory) -> float:
    """Worst (largest) signed energy-balance residual over the checkpoints."""
    return float(np.max(energy_residual_series(traj)))
