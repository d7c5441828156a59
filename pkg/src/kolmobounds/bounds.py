"""Rigorous spectral bounds: trapping constants, spectrum envelopes, inertial-range endpoints.

Units (length L, time T): R is an L2 norm and carries L^{5/2}/T; R1 and R2
bound |k| |u_hat| with u_hat ~ L^{5/2}/T and so carry L^{3/2}/T; eps carries
L^2/T^3 and nu carries L^2/T.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import max_scaled_amplitude
from .spectra import EnergySpectrum

__all__ = [
    "PASS",
    "FAIL",
    "UNMET",
    "REL_TOL",
    "Check",
    "BoundsLedger",
    "min_R1",
    "min_R1_forced",
    "R_of_T",
    "R2_of_T",
    "trapping_hypothesis",
    "check_invariant_A",
    "check_energy_growth",
    "check_thm4",
    "check_thm5",
    "kappa1_bar",
    "kappa2_bar",
    "T0",
    "epsilon_max",
    "r_nu",
    "r_nu_closed_form",
    "kolmogorov_scales",
    "scale_comparisons",
    "bound_crossing",
]

PASS = "PASS"
FAIL = "FAIL"
UNMET = "HYPOTHESES_UNMET"
REL_TOL = 1e-9


@dataclass
class Check:
    """Outcome of one inequality check.

    ``margin`` is the worst absolute slack bound - value (negative on
    violation); ``rel_margin`` divides by the bound.  ``gating`` marks checks
    that are consequences of a theorem, so a FAIL signals a defect rather than
    an expected physical comparison outcome.
    """

    name: str
    verdict: str
    margin: float
    rel_margin: float = math.nan
    gating: bool = True
    note: str = ""
    series: list = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.gating and self.verdict == FAIL

    def to_dict(self) -> dict:
        d = asdict(self)
        d["margin"] = _finite_or_str(self.margin)
        d["rel_margin"] = _finite_or_str(self.rel_margin)
        d["series"] = [[_finite_or_str(v) for v in row] for row in self.series]
        return d


def _finite_or_str(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _compare(values, bounds, tol=REL_TOL):
    """Return (ok, worst absolute margin, worst relative margin) for values <= bounds (1 + tol)."""
    v = np.atleast_1d(np.asarray(values, dtype=float))
    b = np.broadcast_to(np.asarray(bounds, dtype=float), v.shape)
    ok = bool(np.all(v <= b * (1 + tol)))
    margins = b - v
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(b > 0, margins / np.where(b > 0, b, 1.0), np.where(v <= 0, math.inf, -math.inf))
    worst = float(np.min(margins)) if margins.size else math.inf
    worst_rel = float(np.min(rel)) if rel.size else math.inf
    return ok, worst, worst_rel


# -- trapping constants -------------------------------------------------------


def min_R1(R: float, nu: float, V: float) -> float:
    """Smallest R1 with R^2 / sqrt(V) <= nu R1."""
    if not (nu > 0 and V > 0):
        raise ValueError("nu and V must be positive")
    return R * R / (nu * math.sqrt(V))


def min_R1_forced(R_series, force_sup_series, nu: float, V: float, floor: float = 0.0) -> np.ndarray:
    """R1(t) = running max of (R(t)^2/sqrt(V) + sup_k |f_hat(k,t)|/|k|) / nu.

    ``floor`` lets the caller start from a larger admissible R1(0), e.g. the
    initial sup |k| |u_hat|.
    """
    if not (nu > 0 and V > 0):
        raise ValueError("nu and V must be positive")
    R = np.asarray(R_series, dtype=float)
    g = np.asarray(force_sup_series, dtype=float)
    raw = (R * R / math.sqrt(V) + g) / nu
    return np.maximum.accumulate(np.maximum(raw, floor))


def R_of_T(R0: float, nu: float, F2) -> float | np.ndarray:
    """Energy-ball radius sqrt(R0^2 + F^2(T)/nu)."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    out = np.sqrt(R0 * R0 + np.asarray(F2, dtype=float) / nu)
    return float(out) if out.ndim == 0 else out


def R2_of_T(R1_0: float, R_T: float, nu: float, V: float, F: float = 0.0, filtered: bool = False) -> float:
    """Time-integral constant R2(T) = (R4 + sqrt(2 R1(0)^2 + R4^2)) / 2.

    R4 = R(T)^2/(nu sqrt(V)) + F/sqrt(nu), with F = F_inf(T) for a k-uniform
    constant.  ``filtered`` doubles both R4 coefficients and uses 4 R1(0)^2
    under the root (the constant of the smooth-cutoff version).
    """
    if not (nu > 0 and V > 0):
        raise ValueError("nu and V must be positive")
    c = 2.0 if filtered else 1.0
    R4 = c * (R_T * R_T / (nu * math.sqrt(V)) + F / math.sqrt(nu))
    under = (4.0 if filtered else 2.0) * R1_0 * R1_0 + R4 * R4
    return 0.5 * (R4 + math.sqrt(under))


def trapping_hypothesis(R, R1, nu: float, V: float, force_sup=0.0, tol: float = 1e-12) -> tuple[bool, float]:
    """Check R^2/sqrt(V) + sup|f_hat|/|k| <= nu R1 pointwise; return (ok, worst margin).

    The margin is nu R1 - (R^2/sqrt(V) + sup|f_hat|/|k|).  Equality is admitted
    (up to ``tol`` relative) since the minimal R1 is built from it.
    """
    R = np.asarray(R, dtype=float)
    lhs = R * R / math.sqrt(V) + np.asarray(force_sup, dtype=float)
    rhs = nu * np.asarray(R1, dtype=float)
    ok = bool(np.all(lhs <= rhs * (1 + tol)))
    return ok, float(np.min(rhs - lhs))


def check_invariant_A(fields, R1_series, hypotheses_ok: bool = True, name: str = "trapping") -> Check:
    """sup_k |k||u_hat(k,t)| <= R1(t) at every checkpoint, given m(0) <= R1(0)."""
    m = np.array([max_scaled_amplitude(f) for f in fields])
    R1 = np.broadcast_to(np.asarray(R1_series, dtype=float), m.shape)
    series = [[f.t, mi, ri] for f, mi, ri in zip(fields, m, R1)]
    if not hypotheses_ok:
        return Check(name, UNMET, math.nan, note="trapping hypothesis does not hold", series=series)
    if m[0] > R1[0] * (1 + REL_TOL):
        return Check(name, UNMET, R1[0] - m[0], note="initial data outside A_R1", series=series)
    ok, margin, rel = _compare(m, R1)
    return Check(name, PASS if ok else FAIL, margin, rel, series=series)


def check_energy_growth(energies, dissipation, R_series, name: str = "energy_ball") -> Check:
    """||u(t)||^2 + nu int ||grad u||^2 <= R(t)^2 at each checkpoint."""
    lhs = np.asarray(energies) + np.asarray(dissipation)
    bound = np.asarray(R_series) ** 2
    ok, margin, rel = _compare(lhs, bound)
    return Check(name, PASS if ok else FAIL, margin, rel)


def check_thm4(spectra, R1_series, hypotheses_ok: bool = True, name: str = "spectrum_envelope") -> Check:
    """E(kappa, t) <= 4 pi R1(t)^2 in every bin and checkpoint."""
    spectra = list(spectra)
    R1 = np.broadcast_to(np.asarray(R1_series, dtype=float), (len(spectra),))
    if not hypotheses_ok:
        return Check(name, UNMET, math.nan, note="trapping hypothesis does not hold")
    worst, worst_rel, ok = math.inf, math.inf, True
    series = []
    for s, r1 in zip(spectra, R1):
        bound = 4 * math.pi * r1 * r1
        o, mgn, rel = _compare(s.values, bound)
        ok &= o
        worst = min(worst, mgn)
        worst_rel = min(worst_rel, rel)
        series.append([s.t, float(np.max(s.values, initial=0.0)), bound])
    return Check(name, PASS if ok else FAIL, worst, worst_rel, series=series)


def check_thm5(avg: EnergySpectrum, R2: float, nu: float, T: float, hypotheses_ok: bool = True,
               name: str = "time_average_decay") -> Check:
    """(1/T) int_0^T E dt <= 4 pi R2^2 / (nu kappa^2 T) per bin.

    Each bin is compared at its lower edge kappa = j a (the bin's largest
    admissible bound); bin 0 is unconstrained.
    """
    if not hypotheses_ok:
        return Check(name, UNMET, math.nan, note="trapping hypothesis does not hold")
    if not T > 0:
        raise ValueError("T must be positive")
    edges = avg.lower_edges
    with np.errstate(divide="ignore"):
        bound = np.where(edges > 0, 4 * math.pi * R2 * R2 / (nu * T * np.where(edges > 0, edges, 1.0) ** 2), math.inf)
    finite = np.isfinite(bound)
    ok, margin, rel = _compare(avg.values[finite], bound[finite])
    series = [[float(k), float(e), float(b)] for k, e, b in zip(edges, avg.values, bound)]
    return Check(name, PASS if ok else FAIL, margin, rel, series=series)


# -- inertial-range endpoints ----------------------------------------------------


def _positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive, got {v}")


def kappa1_bar(C0: float, eps: float, R1: float) -> float:
    """Lower inertial-range limit: solves C0 eps^(2/3) kappa^(-5/3) = 4 pi R1^2."""
    _positive(C0=C0, eps=eps, R1=R1)
    return C0 ** 0.6 * eps ** 0.4 / (4 * math.pi * R1 * R1) ** 0.6


def kappa2_bar(C0: float, nu: float, eps: float, R2: float, T: float) -> float:
    """Upper inertial-range limit: solves C0 eps^(2/3) kappa^(-5/3) = 4 pi R2^2 / (nu T kappa^2)."""
    _positive(C0=C0, nu=nu, eps=eps, R2=R2, T=T)
    return (4 * math.pi) ** 3 / (C0 * nu) ** 3 / eps**2 * R2**6 / T**3


def T0(C0: float, nu: float, eps: float, R1: float, R2: float) -> float:
    """Horizon at which kappa2_bar(T) meets kappa1_bar for fixed R1, R2."""
    _positive(C0=C0, nu=nu, eps=eps, R1=R1, R2=R2)
    return (4 * math.pi) ** 1.2 * R1**0.4 * R2**2 / (eps**0.8 * C0**1.2 * nu)


def epsilon_max(C0: float, nu: float, R1: float, R2: float, T: float) -> float:
    """Largest eps for which the graph of E_K can meet the admissible set."""
    _positive(C0=C0, nu=nu, R1=R1, R2=R2, T=T)
    return (4 * math.pi * (R2 / math.sqrt(T)) ** (5.0 / 3.0) * R1 ** (1.0 / 3.0) / (nu ** (5.0 / 6.0) * C0)) ** 1.5


def r_nu(k1: float, k2: float) -> float:
    """Inertial-range extent ratio kappa2_bar / kappa1_bar."""
    _positive(kappa1=k1)
    return k2 / k1


def r_nu_closed_form(C0: float, nu: float, eps: float, R1: float, R2: float, T: float) -> float:
    _positive(C0=C0, nu=nu, eps=eps, R1=R1, R2=R2, T=T)
    return (4 * math.pi / C0) ** 3.6 * (R1**0.4 * R2**2 / T) ** 3 / (eps**2.4 * nu**3)


def bound_crossing(R1: float, R2: float, nu: float, T: float) -> float:
    """Wavenumber where the two envelopes 4 pi R1^2 and 4 pi R2^2/(nu T kappa^2) meet."""
    _positive(R1=R1, R2=R2, nu=nu, T=T)
    return R2 / (R1 * math.sqrt(nu * T))


def kolmogorov_scales(nu: float, eps: float, V: float, R: float) -> dict:
    """Kolmogorov length, wavenumber, velocity and time, plus the Taylor wavenumber."""
    _positive(nu=nu, eps=eps, V=V, R=R)
    eta = (nu**3 / eps) ** 0.25
    return {
        "eta_nu": eta,
        "kappa_nu": 2 * math.pi / eta,
        "kappa_lambda": 2 * math.pi * math.sqrt(eps * V / (nu * R * R)),
        "u_nu": (eps * nu) ** 0.25,
        "tau_nu": math.sqrt(nu / eps),
    }


def scale_comparisons(scales: dict, *, kappa2: float, R: float, R1: float, R2: float, T: float,
                      C0: float, nu: float, hypotheses_ok: bool = True) -> list[Check]:
    """Compare the physical scales with the rigorous endpoints.

    kappa_nu <= kappa2_bar and kappa_lambda <= kappa2_bar are expected only for
    small eps and nu, and the u_nu bound holds exactly when eps <= eps_max;
    these are informational.  kappa_lambda >= (R / (2 pi R1)) kappa_nu^2 is
    implied by the trapping hypothesis and so gates.
    """
    out = []
    for key in ("kappa_nu", "kappa_lambda"):
        ok, m, rel = _compare(scales[key], kappa2)
        out.append(Check(f"{key}<=kappa2_bar", PASS if ok else FAIL, m, rel, gating=False))
    taylor_floor = R / (2 * math.pi * R1) * scales["kappa_nu"] ** 2
    if hypotheses_ok:
        ok, m, rel = _compare(taylor_floor, scales["kappa_lambda"])
        out.append(Check("kappa_lambda>=taylor_floor", PASS if ok else FAIL, m, rel))
    else:
        out.append(Check("kappa_lambda>=taylor_floor", UNMET, math.nan))
    u_bound = nu ** (-1.0 / 16.0) * (4 * math.pi / C0) ** 0.375 * ((R2 / math.sqrt(T)) ** 5 * R1) ** 0.125
    ok, m, rel = _compare(scales["u_nu"], u_bound)
    out.append(Check("u_nu<=bound", PASS if ok else FAIL, m, rel, gating=False))
    return out


# -- ledger ---------------------------------------------------------------------


@dataclass
class BoundsLedger:
    """All constants of one run with the checks that used them."""

    constants: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def any_failed(self) -> bool:
        return any(c.failed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "constants": {k: _finite_or_str(v) if isinstance(v, float) else v for k, v in self.constants.items()},
            "inputs": self.inputs,
            "series": {k: [_finite_or_str(x) for x in v] for k, v in self.series.items()},
            "checks": [c.to_dict() for c in self.checks],
            "notes": list(self.notes),
            "any_failed": self.any_failed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def margins_csv(self) -> str:
        """Series of every check that carries one: check,x,value,bound.

        ``x`` is the checkpoint time for time series and the bin edge for
        per-bin checks.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "x", "value", "bound"])
        for c in self.checks:
            for row in c.series:
                w.writerow([c.name] + [repr(float(x)) for x in row])
        return buf.getvalue()
