"""Localized Fourier norms through smooth cube cutoffs.

A cutoff centred at a wavevector k with half-width delta equals 1 on the cube
|xi_i - k_i| <= delta/2 and vanishes for |xi_i - k_i| >= delta, with a C^2
quintic transition in between on each axis.  Requiring
delta < |k| / (2 sqrt(3)) keeps the support inside |k|/2 < |xi| < 3|k|/2.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid

from .forcing import Forcing
from .lattice import Lattice, SpectralField, mode_energy

__all__ = [
    "P_GRID",
    "CubeCutoff",
    "smootherstep",
    "e_p",
    "f_p",
    "hypothesis_R1",
    "check_lemma_hypothesis",
    "check_filtered_conclusion",
    "check_l2t_surrogate",
    "FilterRow",
    "rows_to_csv",
]

P_GRID = (2, 4, 8, 16, 64, math.inf)


def smootherstep(s):
    """6 s^5 - 15 s^4 + 10 s^3 clamped to [0, 1]; C^2 at both ends."""
    s = np.clip(s, 0.0, 1.0)
    return s * s * s * (s * (6 * s - 15) + 10)


@dataclass(frozen=True, eq=False)
class CubeCutoff:
    lattice: Lattice
    center: tuple[float, float, float]
    delta: float

    def __post_init__(self):
        c = tuple(float(x) for x in self.center)
        object.__setattr__(self, "center", c)
        kn = math.sqrt(sum(x * x for x in c))
        if not self.delta > 0:
            raise ValueError("cutoff half-width must be positive")
        if self.delta >= kn / (2 * math.sqrt(3)):
            raise ValueError(
                f"half-width {self.delta} must be below |k|/(2 sqrt 3) = {kn / (2 * math.sqrt(3)):.6g}"
            )

    @property
    def kmag(self) -> float:
        return math.sqrt(sum(x * x for x in self.center))

    @cached_property
    def values(self) -> np.ndarray:
        """Profile chi_hat(xi) on every lattice mode."""
        k = self.lattice.k
        out = np.ones(self.lattice.shape)
        half = self.delta / 2
        for i in range(3):
            d = np.abs(k[i] - self.center[i])
            out *= smootherstep((self.delta - d) / half)
        out.setflags(write=False)
        return out

    @cached_property
    def support(self) -> np.ndarray:
        return self.values > 0


def _lp(amp: np.ndarray, p: float, cell: float) -> float:
    if p == math.inf:
        return float(np.max(amp, initial=0.0))
    if not p >= 1:
        raise ValueError("p must be >= 1")
    top = float(np.max(amp, initial=0.0))
    if top == 0.0:
        return 0.0
    # scale by the max before powering so large p does not underflow
    return top * math.fsum(((amp / top) ** p * cell).ravel()) ** (1.0 / p)


def e_p(field: SpectralField, cutoff: CubeCutoff, p: float) -> float:
    """(sum |chi_hat u_hat|^p |Gamma'|)^(1/p); the max for p = inf."""
    sup = cutoff.support
    amp = cutoff.values[sup] * np.sqrt(mode_energy(field.coeffs)[sup])
    return _lp(amp, p, field.lattice.cell)


def _force_lp(force: np.ndarray, lattice: Lattice, cutoff: CubeCutoff, p: float) -> float:
    sup = cutoff.support
    amp = cutoff.values[sup] * np.sqrt(mode_energy(force)[sup] * lattice.inv_k2[sup])
    return _lp(amp, p, lattice.cell)


def f_p(forcing: Forcing | None, cutoff: CubeCutoff, p: float, times) -> np.ndarray:
    """Running sup over the sample ``times`` of (sum |chi_hat f_hat|^p / |xi|^p |Gamma'|)^(1/p)."""
    times = np.asarray(times, dtype=float)
    if forcing is None or forcing.model.is_zero:
        return np.zeros(times.shape)
    vals = np.array([_force_lp(forcing(t), cutoff.lattice, cutoff, p) for t in times])
    return np.maximum.accumulate(vals)


def hypothesis_R1(R_series, fp_series, nu: float, V: float, delta: float, p: float) -> np.ndarray:
    """Smallest nondecreasing R1(t) with (2 delta)^(3/p) R^2/sqrt(V) + f_p <= (nu/6) R1."""
    R = np.asarray(R_series, dtype=float)
    expo = 0.0 if p == math.inf else 3.0 / p
    raw = 6.0 * ((2 * delta) ** expo * R * R / math.sqrt(V) + np.asarray(fp_series, dtype=float)) / nu
    return np.maximum.accumulate(raw)


def check_lemma_hypothesis(R_series, fp_series, nu, V, delta, p, R1_series, tol=1e-12):
    """Return (ok, margin series) for (2 delta)^(3/p) R^2/sqrt(V) + f_p <= (nu/6) R1."""
    R = np.asarray(R_series, dtype=float)
    expo = 0.0 if p == math.inf else 3.0 / p
    lhs = (2 * delta) ** expo * R * R / math.sqrt(V) + np.asarray(fp_series, dtype=float)
    rhs = nu / 6.0 * np.asarray(R1_series, dtype=float)
    margin = rhs - lhs
    return bool(np.all(lhs <= rhs * (1 + tol))), margin


def check_filtered_conclusion(fields, cutoff: CubeCutoff, p: float, R1_series, tol=1e-9):
    """Return (ok, e_p series, margin series) for e_p(k,t) <= R1(t)/|k|.

    The caller is responsible for having verified the hypothesis and the
    initial condition e_p(k,0) <= R1(0)/|k|.
    """
    e = np.array([e_p(f, cutoff, p) for f in fields])
    bound = np.asarray(R1_series, dtype=float) / cutoff.kmag
    return bool(np.all(e <= bound * (1 + tol))), e, bound - e


def check_l2t_surrogate(fields, cutoff: CubeCutoff, R2: float, nu: float, tol=1e-9):
    """int_0^T max |chi_hat u_hat|^2 dt <= R2^2 / (nu |k|^4), trapezoid over checkpoints.

    Returns (ok, integral, bound).
    """
    t = np.array([f.t for f in fields])
    m = np.array([e_p(f, cutoff, math.inf) ** 2 for f in fields])
    integral = float(trapezoid(m, t))
    bound = R2 * R2 / (nu * cutoff.kmag**4)
    return integral <= bound * (1 + tol), integral, bound


@dataclass
class FilterRow:
    k: tuple
    delta: float
    p: float
    t: float
    e_p: float
    f_p: float
    hypothesis_margin: float
    conclusion_margin: float


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "delta", "p", "t", "e_p", "f_p", "hypothesis_margin", "conclusion_margin"])
    for r in rows:
        w.writerow(
            [
                " ".join(repr(float(x)) for x in r.k),
                repr(float(r.delta)),
                "inf" if r.p == math.inf else repr(float(r.p)),
                repr(float(r.t)),
                repr(float(r.e_p)),
                repr(float(r.f_p)),
                repr(float(r.hypothesis_margin)),
                repr(float(r.conclusion_margin)),
            ]
        )
    return buf.getvalue()
