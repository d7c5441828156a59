"""Does a run follow the -5/3 law on a window?  Three criteria and their endpoint consequences.

uniform   sup over bins and times of (1 + kappa^(5/3)) |E - E_K|
sobolev   sup over times of int_window (1 + kappa^(5/3)) |E - E_K| dkappa
besov     per dyadic shell 2^(j-1/2) < kappa <= 2^(j+1/2), the shell mass of E
          against that of E_K, with tolerance C1 2^(-5j/3)

A PASS with small C1 forces the window inside [kappa1_bar, kappa2_bar] and, for
unforced runs, the horizon below T0.  Those endpoint formulas are evaluated
with C0 divided by a slack factor, which loosens every one of them.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bounds as B
from .spectra import EnergySpectrum, KolmogorovModel

__all__ = [
    "BESOV_CONSTANT",
    "BehaviorVerdict",
    "EndpointReport",
    "uniform_criterion",
    "sobolev_criterion",
    "besov_criterion",
    "besov_shells",
    "shell_mass",
    "endpoint_constraints",
]

# int over (2^(j-1/2), 2^(j+1/2)] of kappa^(-5/3) dkappa equals this times 2^(-2j/3)
BESOV_CONSTANT = 3.0 * math.sinh(math.log(2.0) / 3.0)


@dataclass
class BehaviorVerdict:
    criterion: str
    window: tuple[float, float]
    horizon: float
    C1: float
    deviation: float
    verdict: str
    theta: float = 1.0
    per_time: list = field(default_factory=list)
    shells: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    endpoints: dict | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == B.PASS

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str)


def _validate(window, C1, theta):
    k1, k2 = window
    if not (0 < k1 < k2):
        raise ValueError(f"window must satisfy 0 < kappa1 < kappa2, got {window}")
    if C1 < 0:
        raise ValueError("C1 must be nonnegative")
    if not (0 < theta <= 1):
        raise ValueError("theta must lie in (0, 1]")


def _select_times(spectra, horizon):
    chosen = [s for s in spectra if s.t <= horizon * (1 + 1e-12)]
    if not chosen:
        raise ValueError(f"no spectrum at or before the horizon {horizon}")
    return chosen


def _window_bins(s: EnergySpectrum, window):
    c = s.centers
    sel = (c >= window[0]) & (c <= window[1])
    if not np.any(sel):
        raise ValueError(f"no bin centre lies in the window {window}; empty window coverage")
    return sel


def _aggregate(devs, theta):
    """Deviation that holds on at least a fraction theta of the checkpoints."""
    devs = np.sort(np.asarray(devs))
    n = int(math.ceil(theta * devs.size)) - 1
    return float(devs[max(n, 0)])


def uniform_criterion(spectra, model: KolmogorovModel, window, horizon, C1, theta=1.0) -> BehaviorVerdict:
    """Weighted sup-norm distance to E_K over bins centred in ``window``."""
    _validate(window, C1, theta)
    spectra = _select_times(list(spectra), horizon)
    per = []
    for s in spectra:
        sel = _window_bins(s, window)
        k = s.centers[sel]
        d = (1 + k ** (5.0 / 3.0)) * np.abs(s.values[sel] - model(k))
        per.append([s.t, float(np.max(d))])
    dev = _aggregate([p[1] for p in per], theta)
    return BehaviorVerdict("uniform", tuple(window), horizon, C1, dev, B.PASS if dev < C1 else B.FAIL,
                           theta, per)


def sobolev_criterion(spectra, model: KolmogorovModel, window, horizon, C1, theta=1.0) -> BehaviorVerdict:
    """Weighted L1 distance to E_K, midpoint rule over bins centred in ``window``."""
    _validate(window, C1, theta)
    spectra = _select_times(list(spectra), horizon)
    per = []
    for s in spectra:
        sel = _window_bins(s, window)
        k = s.centers[sel]
        d = (1 + k ** (5.0 / 3.0)) * np.abs(s.values[sel] - model(k)) * s.a
        per.append([s.t, math.fsum(d)])
    dev = _aggregate([p[1] for p in per], theta)
    return BehaviorVerdict("sobolev", tuple(window), horizon, C1, dev, B.PASS if dev < C1 else B.FAIL,
                           theta, per)


def besov_shells(window) -> range:
    """Shell indices j1..j2 with j1 < log2(kappa1) and log2(kappa2) < j2."""
    j1 = math.ceil(math.log2(window[0])) - 1
    j2 = math.floor(math.log2(window[1])) + 1
    return range(j1, j2 + 1)


def shell_mass(s: EnergySpectrum, j: int) -> float | None:
    """int of E over (2^(j-1/2), 2^(j+1/2)], treating E as constant per bin.

    Returns None when the shell reaches past the last bin.
    """
    lo, hi = 2.0 ** (j - 0.5), 2.0 ** (j + 0.5)
    edges = s.lower_edges
    if hi > edges[-1] + s.a:
        return None
    overlap = np.clip(np.minimum(edges + s.a, hi) - np.maximum(edges, lo), 0.0, None)
    return math.fsum(overlap * s.values)


def besov_criterion(spectra, model: KolmogorovModel, window, horizon, C1, theta=1.0,
                    k_max: float | None = None) -> BehaviorVerdict:
    """Dyadic shell masses against C0 eps^(2/3) BESOV_CONSTANT 2^(-2j/3).

    The deviation reported is max_j |shell_j - reference_j| 2^(5j/3), so the
    per-shell tolerance C1 2^(-5j/3) becomes deviation < C1.  Shells beyond
    the spectrum range, or past ``k_max`` (e.g. the dealias radius), are
    skipped with a note.
    """
    _validate(window, C1, theta)
    spectra = _select_times(list(spectra), horizon)
    notes, shells, per = [], [], []
    js = list(besov_shells(window))
    usable = []
    for j in js:
        hi = 2.0 ** (j + 0.5)
        if (k_max is not None and hi > k_max) or shell_mass(spectra[0], j) is None:
            notes.append(f"shell j={j} extends past the retained band; skipped")
        else:
            usable.append(j)
    if not usable:
        raise ValueError("no Besov shell lies inside the retained band")
    for s in spectra:
        worst = 0.0
        for j in usable:
            ref = model.amplitude * BESOV_CONSTANT * 2.0 ** (-2.0 * j / 3.0)
            got = shell_mass(s, j)
            dev = abs(got - ref) * 2.0 ** (5.0 * j / 3.0)
            worst = max(worst, dev)
            shells.append({"t": s.t, "j": j, "mass": got, "reference": ref,
                           "tolerance": C1 * 2.0 ** (-5.0 * j / 3.0)})
        per.append([s.t, worst])
    dev = _aggregate([p[1] for p in per], theta)
    return BehaviorVerdict("besov", tuple(window), horizon, C1, dev, B.PASS if dev < C1 else B.FAIL,
                           theta, per, shells, notes)


@dataclass
class EndpointReport:
    status: str
    kappa1_bar: float
    kappa2_bar: float
    T0: float | None
    slack: float
    small_C1: bool
    checks: dict
    envelope_violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def endpoint_constraints(verdict: BehaviorVerdict, *, C0: float, eps: float, R1: float, R2: float,
                         nu: float, unforced: bool, slack: float = 2.0, small_factor: float = 0.1,
                         spectra=None) -> EndpointReport:
    """Endpoint inequalities kappa1_bar <= kappa1, kappa2 <= kappa2_bar and (unforced) T_bar <= T0.

    The constants use C0 / slack.  Status is CONSISTENT when all inequalities
    hold, IMPOSSIBLE_BY_THEOREM when a PASS with small C1 contradicts one of
    them, and NOT_APPLICABLE when the criterion did not pass with small C1.
    Optional ``spectra`` are also scanned for bins above the 4 pi R1^2 envelope.
    """
    if not slack >= 1:
        raise ValueError("slack must be >= 1")
    c0 = C0 / slack
    k1b = B.kappa1_bar(c0, eps, R1)
    k2b = B.kappa2_bar(c0, nu, eps, R2, verdict.horizon)
    t0 = B.T0(c0, nu, eps, R1, R2) if unforced else None
    k1, k2 = verdict.window
    checks = {
        "kappa1_bar<=kappa1": {"ok": k1b <= k1, "margin": k1 - k1b},
        "kappa2<=kappa2_bar": {"ok": k2 <= k2b, "margin": k2b - k2},
    }
    if unforced:
        checks["T_bar<=T0"] = {"ok": verdict.horizon <= t0, "margin": t0 - verdict.horizon}
    small = verdict.C1 <= small_factor * C0 * eps ** (2.0 / 3.0)
    violations = []
    if spectra is not None:
        env = 4 * math.pi * R1 * R1
        for s in spectra:
            bad = np.nonzero(s.values > env * (1 + B.REL_TOL))[0]
            for b in bad:
                violations.append({"t": s.t, "kappa": float(s.lower_edges[b]),
                                   "E": float(s.values[b]), "envelope": env})
    all_ok = all(c["ok"] for c in checks.values())
    if not (verdict.passed and small):
        status = "NOT_APPLICABLE"
    elif all_ok:
        status = "CONSISTENT"
    else:
        status = "IMPOSSIBLE_BY_THEOREM"
    rep = EndpointReport(status, k1b, k2b, t0, slack, small, checks, violations)
    verdict.endpoints = rep.to_dict()
    return rep
