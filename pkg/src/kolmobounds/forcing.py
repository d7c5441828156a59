"""Solenoidal body forces and their accumulated statistics.

Force variants
--------------
zero        f = 0
steady      fixed random band-limited pattern
periodic    steady pattern modulated by cos(omega t)
stochastic  Ornstein-Uhlenbeck process per mode on the support shell

All samples are projected divergence-free, exactly Hermitian and have
f_hat(0) = 0.  With ``clip`` set, every sample obeys |f_hat(k)| <= clip * |k|;
passing ``clip = nu * R1`` enforces the hypothesis of the forced trapping theorem.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import Lattice, SpectralField, forward, mode_energy, project, symmetrize

__all__ = [
    "ForcingModel",
    "Forcing",
    "ForceStats",
    "sample_force",
    "VARIANTS",
]

VARIANTS = ("zero", "steady", "periodic", "stochastic")


@dataclass(frozen=True)
class ForcingModel:
    variant: str = "zero"
    band: tuple[float, float] = (1.0, 2.5)
    amplitude: float = 0.0
    seed: int = 0
    correlation_time: float = 1.0
    omega: float = 1.0
    sample_dt: float = 0.01
    clip: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown forcing variant {self.variant!r}; expected one of {VARIANTS}")
        object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if not (0 <= self.band[0] <= self.band[1]):
            raise ValueError(f"bad support shell {self.band}")
        if self.amplitude < 0:
            raise ValueError("forcing amplitude must be nonnegative")
        if self.variant == "stochastic":
            if not self.correlation_time > 0 or not self.sample_dt > 0:
                raise ValueError("stochastic forcing needs positive correlation_time and sample_dt")
        if self.clip is not None and self.clip < 0:
            raise ValueError("clip bound must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return self.variant == "zero" or self.amplitude == 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band"] = list(self.band)
        return d


class Forcing:
    """A forcing model bound to a lattice; callable as ``forcing(t) -> coeffs``.

    The stochastic variant owns its random stream.  Its chain lives on the grid
    ``n * sample_dt`` and is linearly interpolated in between, so the sample at a
    given ``t`` depends only on the seed, never on the query order.
    """

    def __init__(self, model: ForcingModel, lattice: Lattice):
        self.model = model
        self.lattice = lattice
        kmag = lattice.kmag
        self.support = lattice.retained & (kmag >= model.band[0]) & (kmag <= model.band[1])
        if not model.is_zero and not np.any(self.support):
            raise ValueError(f"forcing shell {model.band} contains no retained modes")
        self._zero = lattice.zeros()
        self._zero.setflags(write=False)
        self._pattern = None
        self._chain = {}
        self._recent = {}
        self._nodes = {}
        self._rng = None
        self._chain_head = -1
        if model.variant in ("steady", "periodic") and not model.is_zero:
            rng = np.random.default_rng(model.seed)
            pat = self._shaped_noise(rng)
            e = math.fsum(mode_energy(pat).ravel())
            pat *= model.amplitude / math.sqrt(e)
            self._pattern = self._clip(pat)
            self._pattern.setflags(write=False)

    # -- construction helpers --------------------------------------------------
    def _shaped_noise(self, rng) -> np.ndarray:
        noise = rng.standard_normal((3,) + self.lattice.shape)
        c = forward(self.lattice, noise)
        c[:, ~self.support] = 0.0
        return symmetrize(project(self.lattice, c))

    def _noise_scale(self) -> float:
        # E sum|xi_hat|^2 for projected white noise is 2 M V / Ntot
        lat = self.lattice
        m = int(np.count_nonzero(self.support))
        return self.model.amplitude / math.sqrt(2 * m * lat.volume / lat.n_points)

    def _clip(self, c: np.ndarray) -> np.ndarray:
        if self.model.clip is None:
            return c
        amp = np.sqrt(mode_energy(c))
        limit = self.model.clip * self.lattice.kmag
        scale = np.ones_like(amp)
        over = amp > limit
        scale[over] = limit[over] / amp[over]
        return c * scale

    # -- stochastic chain -------------------------------------------------------
    def _chain_state(self, n: int) -> np.ndarray:
        if n in self._chain:
            return self._chain[n]
        if n < self._chain_head or self._rng is None:
            self._rng = np.random.default_rng(self.model.seed)
            self._chain.clear()
            self._chain_head = 0
            self._chain[0] = self._shaped_noise(self._rng) * self._noise_scale()
        rho = math.exp(-self.model.sample_dt / self.model.correlation_time)
        sigma = math.sqrt(1.0 - rho * rho) * self._noise_scale()
        while self._chain_head < n:
            prev = self._chain[self._chain_head]
            nxt = rho * prev + sigma * self._shaped_noise(self._rng)
            self._chain_head += 1
            self._chain[self._chain_head] = nxt
            for key in [k for k in self._chain if k < self._chain_head - 3]:
                del self._chain[key]
        return self._chain[n]

    # -- public -----------------------------------------------------------------
    def __call__(self, t: float) -> np.ndarray:
        m = self.model
        if m.is_zero:
            return self._zero
        if m.variant == "steady":
            return self._pattern
        hit = self._recent.get(t)
        if hit is not None:
            return hit
        out = self._sample(t)
        out.setflags(write=False)
        if len(self._recent) >= 6:
            self._recent.pop(next(iter(self._recent)))
        self._recent[t] = out
        return out

    def _sample(self, t: float) -> np.ndarray:
        m = self.model
        if m.variant == "periodic":
            return self._pattern * math.cos(m.omega * t)
        if t < 0:
            raise ValueError("stochastic forcing is defined for t >= 0")
        s = t / m.sample_dt
        n = int(math.floor(s))
        w = s - n
        a = self._node(n)
        if w == 0.0:
            return a.copy()
        return (1.0 - w) * a + w * self._node(n + 1)

    def _node(self, n: int) -> np.ndarray:
        """Clipped chain state at grid point ``n``.

        Clipping the nodes rather than the interpolant keeps the sample path
        piecewise linear; each mode's admissible set is a disc, so the convex
        combination of two clipped nodes still obeys the bound.
        """
        hit = self._nodes.get(n)
        if hit is None:
            hit = self._clip(self._chain_state(n))
            if len(self._nodes) >= 4:
                self._nodes.pop(next(iter(self._nodes)))
            self._nodes[n] = hit
        return hit

    def rate(self, t: float, side: str = "right") -> np.ndarray:
        """Time derivative of the sample at ``t``.

        The stochastic chain is piecewise linear; at a chain node ``side``
        selects the one-sided derivative ("left" or "right").
        """
        m = self.model
        if m.is_zero or m.variant == "steady":
            return self._zero
        if m.variant == "periodic":
            return self._pattern * (-m.omega * math.sin(m.omega * t))
        s = t / m.sample_dt
        n = int(math.floor(s))
        node = round(s)
        if abs(s - node) < 1e-9:
            n = node - 1 if side == "left" else node
        n = max(n, 0)
        return (self._node(n + 1) - self._node(n)) / m.sample_dt

    def sup_over_k(self, t: float) -> float:
        """sup_k |f_hat(k,t)| / |k| (zero at k = 0)."""
        c = self(t)
        return float(np.max(np.sqrt(mode_energy(c)) * np.sqrt(self.lattice.inv_k2)))


def sample_force(forcing: Forcing, t: float) -> SpectralField:
    return SpectralField(forcing.lattice, forcing(t), t)


@dataclass
class ForceStats:
    """Running force integrals, advanced by the trapezoidal rule.

    ``integral[k]`` holds int_0^T |f_hat(k,t)|^2 dt; ``sup_ratio`` holds
    max_{s<=T} sup_k |f_hat(k,s)|/|k|.
    """

    lattice: Lattice
    T: float = 0.0
    integral: np.ndarray | None = None
    sup_ratio: float = 0.0
    _last: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.integral is None:
            self.integral = np.zeros(self.lattice.shape)

    def start(self, f0: np.ndarray) -> None:
        self._last = mode_energy(f0)
        self.sup_ratio = max(self.sup_ratio, _sup_ratio(self.lattice, self._last))

    def update(self, f_new: np.ndarray, dt: float) -> None:
        if dt <= 0:
            raise ValueError("dt must be positive")
        if self._last is None:
            raise RuntimeError("call start() with the initial force sample first")
        e_new = mode_energy(f_new)
        self.integral += 0.5 * dt * (self._last + e_new)
        self._last = e_new
        self.T += dt
        self.sup_ratio = max(self.sup_ratio, _sup_ratio(self.lattice, e_new))

    def F1(self, kvec=None) -> np.ndarray | float:
        """F1(k,T) = (int_0^T |f_hat(k,t)|^2 dt)**0.5, for one mode or all."""
        F = np.sqrt(self.integral)
        if kvec is None:
            return F
        return float(F[self.lattice.index_of(kvec)])

    def F_inf(self) -> float:
        return float(np.sqrt(np.max(self.integral)))

    def F_squared(self) -> float:
        """F^2(T) = sum_{k != 0} F1(k,T)^2 / |k|^2 = int_0^T ||f||_{H^-1}^2 dt."""
        return math.fsum((self.integral * self.lattice.inv_k2).ravel())

    def F(self) -> float:
        return math.sqrt(self.F_squared())

    def snapshot(self) -> dict:
        return {
            "T": self.T,
            "F_inf": self.F_inf(),
            "F_squared": self.F_squared(),
            "sup_ratio": self.sup_ratio,
        }


def _sup_ratio(lattice: Lattice, e: np.ndarray) -> float:
    return float(np.sqrt(np.max(e * lattice.inv_k2)))
