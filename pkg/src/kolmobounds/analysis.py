"""Trajectory-level analysis: initial data from a config, bound ledgers, filter and behavior reports."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from . import bounds as B
from .behavior import (
    BehaviorVerdict,
    besov_criterion,
    endpoint_constraints,
    sobolev_criterion,
    uniform_criterion,
)
from .dynamics import Trajectory, energy_residual_series
from .filters import (
    P_GRID,
    CubeCutoff,
    _lp,
    FilterRow,
    check_filtered_conclusion,
    check_l2t_surrogate,
    check_lemma_hypothesis,
    e_p,
    hypothesis_R1,
)
from .initial import abc_flow, project_into_trapping_set, random_band_limited
from .io import RunConfig, read_snapshot
from .lattice import SpectralField, max_scaled_amplitude, mode_energy
from .spectra import (
    EnergySpectrum,
    KolmogorovModel,
    dissipation_epsilon1,
    energy_spectrum,
    time_average_spectrum,
)

__all__ = [
    "initial_field",
    "RunConstants",
    "run_constants",
    "spectra_of",
    "build_ledger",
    "filter_report",
    "behavior_report",
    "CRITERIA",
]

CRITERIA = {
    "uniform": uniform_criterion,
    "sobolev": sobolev_criterion,
    "besov": besov_criterion,
}


def initial_field(cfg: RunConfig) -> tuple[SpectralField, dict]:
    """Build the initial field described by ``cfg.initial``; returns (field, info)."""
    lat = cfg.lattice
    ic = cfg.initial
    kind = ic.get("kind", "beltrami")
    info = {"kind": kind}
    if kind == "beltrami":
        f = abc_flow(lat, ic.get("A", 1.0), ic.get("B", 1.0), ic.get("C", 1.0), ic.get("wavenumber", 1.0))
    elif kind == "random":
        seed = cfg.initial_seed()
        energy = float(ic.get("energy", 1.0))
        f = random_band_limited(lat, seed, tuple(ic.get("band", (1.0, 4.0))), energy, float(ic.get("slope", 0.0)))
        info["seed"] = seed
        if ic.get("project", True):
            R = float(ic.get("R", math.sqrt(energy)))
            R1 = float(ic.get("R1", B.min_R1(R, cfg.nu, lat.volume)))
            f = project_into_trapping_set(f, R, R1)
            info.update(R=R, R1=R1)
    else:
        f, _ = read_snapshot(cfg.resolve(ic["path"]))
        if f.lattice != lat:
            raise ValueError("initial snapshot lattice differs from the configured lattice")
        f = f.replace(t=0.0)
    return f, info


@dataclass
class RunConstants:
    R0: float
    R: np.ndarray
    R1: np.ndarray
    m: np.ndarray
    hypotheses_ok: bool
    hypothesis_margin: float
    notes: list


def run_constants(traj: Trajectory, R: float | None = None, R1: float | None = None) -> RunConstants:
    """Energy-ball radius R(t) and trapping constant R1(t) for a trajectory.

    With ``R1`` unset, R1(t) is the smallest nondecreasing admissible function
    that also contains the initial data; with ``R1`` given it is held constant
    and the hypothesis is checked.
    """
    lat, nu = traj.lattice, traj.nu
    V = lat.volume
    E = traj.energies
    notes = []
    R0 = math.sqrt(E[0]) if R is None else float(R)
    ok_ball = E[0] <= R0 * R0 * (1 + 1e-12)
    if not ok_ball:
        notes.append(f"initial energy {E[0]:.6g} exceeds R^2 = {R0 * R0:.6g}")
    Rt = np.atleast_1d(B.R_of_T(R0, nu, traj.force_F2))
    m = np.array([max_scaled_amplitude(f) for f in traj.fields])
    if R1 is None:
        R1t = B.min_R1_forced(Rt, traj.force_sup, nu, V, floor=m[0])
    else:
        R1t = np.full(len(traj), float(R1))
    ok_h, margin = B.trapping_hypothesis(Rt, R1t, nu, V, traj.force_sup)
    if not ok_h:
        notes.append("R^2/sqrt(V) + sup|f_hat|/|k| exceeds nu R1")
    return RunConstants(R0, Rt, R1t, m, ok_ball and ok_h, margin, notes)


def spectra_of(traj: Trajectory, a: float | None = None) -> list[EnergySpectrum]:
    return [energy_spectrum(f, a) for f in traj.fields]


def _eps_choice(eps_cfg, measured, eps_max):
    if isinstance(eps_cfg, (int, float)) and not isinstance(eps_cfg, bool):
        return float(eps_cfg), "config"
    if eps_cfg == "measured" and measured > 0:
        return measured, "measured"
    if eps_max > 0:
        return eps_max, "eps_max"
    return None, "unavailable"


def build_ledger(
    traj: Trajectory,
    *,
    C0: float = 1.0,
    eps="measured",
    a: float | None = None,
    R: float | None = None,
    R1: float | None = None,
    residual_tol: float = 1e-6,
    spectra=None,
) -> B.BoundsLedger:
    """Evaluate every constant and theorem check for one trajectory."""
    if len(traj) < 2:
        raise ValueError("a ledger needs at least two checkpoints")
    lat, nu = traj.lattice, traj.nu
    V = lat.volume
    rc = run_constants(traj, R, R1)
    led = B.BoundsLedger()
    led.notes.extend(rc.notes)
    forced = traj.forcing is not None and not traj.forcing.model.is_zero
    times = traj.times
    T = float(times[-1] - times[0])
    spectra = spectra if spectra is not None else spectra_of(traj, a)
    E = traj.energies

    led.add(B.check_energy_growth(E, traj.dissipation, rc.R))
    name = "trapping_forced" if forced else "trapping_unforced"
    led.add(B.check_invariant_A(traj.fields, rc.R1, rc.hypotheses_ok, name))
    led.add(B.check_thm4(spectra, rc.R1, rc.hypotheses_ok))
    F_inf = float(traj.force_Finf[-1])
    R2 = B.R2_of_T(rc.R1[0], rc.R[-1], nu, V, F_inf)
    avg = time_average_spectrum(spectra)
    led.add(B.check_thm5(avg, R2, nu, T, rc.hypotheses_ok))

    resid = energy_residual_series(traj)
    scale = 0.5 * E[0] if E[0] > 0 else 1.0
    worst = float(np.max(resid))
    led.add(B.Check("energy_inequality", B.PASS if worst <= residual_tol * scale else B.FAIL,
                    residual_tol * scale - worst, 1.0 - worst / (residual_tol * scale),
                    note=f"tolerance {residual_tol:g} x E0/2"))

    eps_spec = [dissipation_epsilon1(s, nu) for s in spectra]
    eps1_mid = float(trapezoid(eps_spec, times) / T)
    eps1 = float((traj.dissipation[-1] - traj.dissipation[0]) / (V * T))
    R1T = float(rc.R1[-1])
    c = {
        "nu": nu, "V": V, "T": T, "C0": C0, "R": rc.R0, "R_T": float(rc.R[-1]),
        "R1_0": float(rc.R1[0]), "R1_T": R1T, "R2_T": R2,
        "R4_T": rc.R[-1] ** 2 / (nu * math.sqrt(V)) + F_inf / math.sqrt(nu),
        "F_inf_T": F_inf, "F2_T": float(traj.force_F2[-1]),
        "epsilon1": eps1, "epsilon1_midpoint": eps1_mid,
        "energy_residual_max": worst, "hypothesis_margin": rc.hypothesis_margin,
        "forced": forced, "a": spectra[0].a,
    }
    eps_max = B.epsilon_max(C0, nu, R1T, R2, T) if R1T > 0 and R2 > 0 else 0.0
    c["epsilon_max"] = eps_max
    eps_val, source = _eps_choice(eps, eps1, eps_max)
    c["epsilon"] = eps_val
    c["epsilon_source"] = source
    if eps_val is not None and R1T > 0:
        k1 = B.kappa1_bar(C0, eps_val, R1T)
        k2 = B.kappa2_bar(C0, nu, eps_val, R2, T)
        c.update(
            kappa1_bar=k1, kappa2_bar=k2,
            T0=B.T0(C0, nu, eps_val, R1T, R2),
            r_nu=B.r_nu(k1, k2),
            r_nu_closed_form=B.r_nu_closed_form(C0, nu, eps_val, R1T, R2, T),
            kappa_cross=B.bound_crossing(R1T, R2, nu, T),
        )
        if not forced:
            c["T0_applies"] = True
        else:
            led.notes.append("T0 is reported for reference; its horizon bound needs f = 0")
        scales = B.kolmogorov_scales(nu, eps_val, V, float(rc.R[-1]))
        c.update(scales)
        for chk in B.scale_comparisons(scales, kappa2=k2, R=float(rc.R[-1]), R1=R1T, R2=R2, T=T,
                                       C0=C0, nu=nu, hypotheses_ok=rc.hypotheses_ok):
            led.add(chk)
    else:
        led.notes.append("no positive eps available; endpoint constants skipped")
    led.constants = c
    led.inputs = {"eps_request": eps, "R_request": R, "R1_request": R1, "checkpoints": len(traj)}
    led.series = {
        "t": times.tolist(), "R": rc.R.tolist(), "R1": rc.R1.tolist(), "m": rc.m.tolist(),
        "energy": E.tolist(), "dissipation": list(map(float, traj.dissipation)),
        "work": list(map(float, traj.work)), "epsilon1_midpoint": eps_spec,
        "energy_residual": resid.tolist(),
    }
    return led


def default_filter_centers(traj: Trajectory, count: int = 3) -> list[tuple]:
    """A few axis and diagonal wavevectors well inside the retained band."""
    lat = traj.lattice
    d = min(lat.dual_spacing)
    kc = lat.k_cut
    picks = [(2 * d, 0.0, 0.0), (2 * d, 2 * d, 0.0), (3 * d, 2 * d, d), (4 * d, 0.0, 0.0)]
    out = [p for p in picks if math.sqrt(sum(x * x for x in p)) * 1.5 < kc]
    return out[:count]


def filter_report(
    traj: Trajectory,
    centers=None,
    deltas=None,
    p_grid=P_GRID,
    R: float | None = None,
) -> tuple[list[FilterRow], list[B.Check]]:
    """Filtered-norm rows and lemma/theorem checks for each cutoff and p.

    For every (center, delta, p) the trapping constant is the smallest
    nondecreasing R1(t) meeting the lemma hypothesis that also satisfies the
    initial condition e_p(k,0) <= R1(0)/|k|.
    """
    lat, nu, V = traj.lattice, traj.nu, traj.lattice.volume
    rc = run_constants(traj, R)
    centers = centers if centers is not None else default_filter_centers(traj)
    times = traj.times
    if traj.forcing is not None and not traj.forcing.model.is_zero:
        n = int(round((times[-1] - times[0]) / traj.dt))
        fine = times[0] + traj.dt * np.arange(n + 1)
        samples = [traj.forcing(t) for t in fine]
    else:
        fine, samples = times, None
    idx = np.searchsorted(fine, times - 1e-12 * max(1.0, abs(times[-1])))
    rows, checks = [], []
    for kv in centers:
        kn = math.sqrt(sum(x * x for x in kv))
        dlist = deltas if deltas is not None else [0.9 * kn / (2 * math.sqrt(3))]
        for delta in dlist:
            cut = CubeCutoff(lat, kv, delta)
            R1_inf0 = None
            for p in p_grid:
                if samples is None:
                    fp = np.zeros(len(times))
                else:
                    sup = cut.support
                    vals = []
                    for s in samples:
                        amp = cut.values[sup] * np.sqrt(mode_energy(s)[sup] * lat.inv_k2[sup])
                        vals.append(_lp(amp, p, lat.cell))
                    fp = np.maximum.accumulate(np.array(vals))[idx]
                e0 = e_p(traj.fields[0], cut, p)
                R1p = np.maximum.accumulate(np.maximum(hypothesis_R1(rc.R, fp, nu, V, delta, p), kn * e0))
                if p == math.inf:
                    R1_inf0 = float(R1p[0])
                ok_h, hmargin = check_lemma_hypothesis(rc.R, fp, nu, V, delta, p, R1p)
                ok_c, e, cmargin = check_filtered_conclusion(traj.fields, cut, p, R1p)
                tag = f"k={tuple(float(x) for x in kv)},delta={delta:.6g},p={p}"
                if ok_h and rc.hypotheses_ok:
                    checks.append(B.Check(f"filtered_bound[{tag}]", B.PASS if ok_c else B.FAIL,
                                          float(np.min(cmargin))))
                else:
                    checks.append(B.Check(f"filtered_bound[{tag}]", B.UNMET, math.nan))
                for i, t in enumerate(times):
                    rows.append(FilterRow(tuple(kv), delta, p, float(t), float(e[i]), float(fp[i]),
                                          float(hmargin[i]), float(cmargin[i])))
            if R1_inf0 is not None:
                R2f = B.R2_of_T(R1_inf0, float(rc.R[-1]), nu, V, float(traj.force_Finf[-1]), filtered=True)
                ok, integral, bound = check_l2t_surrogate(traj.fields, cut, R2f, nu)
                checks.append(B.Check(f"filtered_time_integral[k={tuple(float(x) for x in kv)},delta={delta:.6g}]",
                                      B.PASS if ok else B.FAIL, bound - integral))
    return rows, checks


def behavior_report(
    spectra,
    criterion: str,
    *,
    window,
    horizon: float,
    C1: float,
    C0: float,
    eps: float,
    theta: float = 1.0,
    slack: float = 2.0,
    small_factor: float = 0.1,
    R1: float | None = None,
    R2: float | None = None,
    nu: float | None = None,
    unforced: bool = True,
    k_max: float | None = None,
) -> BehaviorVerdict:
    """Run one criterion; attach endpoint checks when the trapping constants are supplied."""
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}; expected one of {sorted(CRITERIA)}")
    model = KolmogorovModel(C0, eps)
    kw = {"k_max": k_max} if criterion == "besov" else {}
    v = CRITERIA[criterion](spectra, model, window, horizon, C1, theta, **kw)
    if R1 is not None and R2 is not None and nu is not None and R1 > 0 and R2 > 0:
        endpoint_constraints(v, C0=C0, eps=eps, R1=R1, R2=R2, nu=nu, unforced=unforced, slack=slack,
                             small_factor=small_factor, spectra=spectra)
    return v
