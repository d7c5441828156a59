"""On-disk workflows behind the command-line interface.

A run directory holds::

    manifest.json           config, lattice, checkpoint table with budgets and hashes
    checkpoints/ckpt_NNNNN.spb
    series.csv              t, energy, epsilon1, dissipation, work, m
    spectra/                written by diagnose
    ledger.json, margins.csv, behavior_<criterion>.json, filters.csv

Every file is written atomically and contains no timestamps, so identical
configurations give byte-identical outputs.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds as B
from .analysis import behavior_report, build_ledger, filter_report, initial_field, spectra_of
from .dynamics import BlowupError, Solver, Trajectory, enstrophy, nonlinear_term
from .filters import P_GRID, rows_to_csv
from .forcing import Forcing, ForcingModel
from .io import (
    CorruptInputError,
    RunConfig,
    atomic_write_bytes,
    atomic_write_text,
    config_from_dict,
    derive_seed,
    read_snapshot,
    snapshot_bytes,
    write_snapshot,
)
from .lattice import max_scaled_amplitude
from .oracle import oracle_relative_error
from .spectra import (
    EnergySpectrum,
    dissipation_epsilon1,
    ensemble_average_spectrum,
    spectral_mass,
    time_average_spectrum,
)

__all__ = [
    "simulate",
    "load_trajectory",
    "diagnose",
    "bounds",
    "behavior",
    "ensemble",
    "oracle",
    "RunResult",
]

MANIFEST = "manifest.json"


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _clean(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class RunResult:
    out_dir: Path
    trajectory: Trajectory
    config: RunConfig
    manifest: dict


def _ic_R1(f, info, cfg) -> float:
    if "R1" in info:
        return info["R1"]
    R = math.sqrt(f.energy())
    return max(B.min_R1(R, cfg.nu, cfg.lattice.volume), max_scaled_amplitude(f))


def simulate(cfg: RunConfig, out_dir=None) -> RunResult:
    """Integrate the configured run and write checkpoints, series and manifest."""
    out = Path(out_dir) if out_dir is not None else cfg.output_path()
    lat = cfg.lattice
    f0, info = initial_field(cfg)
    model = cfg.forcing_model(_ic_R1(f0, info, cfg))
    forcing = None if model.is_zero else Forcing(model, lat)
    solver = Solver(f0, cfg.nu, cfg.dt, forcing, cfl_safety=cfg.cfl_safety)
    try:
        traj = solver.run(cfg.n_steps, cfg.checkpoint_every)
    except BlowupError as exc:
        write_snapshot(out / "blowup_last_good.spb", exc.last_good.field, cfg.nu)
        raise
    entries = []
    for i, f in enumerate(traj.fields):
        name = f"checkpoints/ckpt_{i:05d}.spb"
        data = snapshot_bytes(f, cfg.nu)
        atomic_write_bytes(out / name, data)
        entries.append(
            {
                "index": i,
                "t": f.t,
                "file": name,
                "sha256": hashlib.sha256(data).hexdigest(),
                "dissipation": traj.dissipation[i],
                "work": traj.work[i],
                "force_sup": traj.force_sup[i],
                "force_F2": traj.force_F2[i],
                "force_Finf": traj.force_Finf[i],
            }
        )
    cdict = cfg.to_dict()
    if cfg.initial.get("kind") == "snapshot":
        cdict["initial"]["path"] = str(cfg.resolve(cfg.initial["path"]).resolve())
    manifest = {
        "format": "kolmobounds-run-1",
        "config": cdict,
        "lattice": {"shape": list(lat.shape), "lengths": list(lat.lengths)},
        "nu": cfg.nu,
        "dt": cfg.dt,
        "steps": cfg.n_steps,
        "checkpoint_every": cfg.checkpoint_every,
        "initial": info,
        "forcing_model": None if forcing is None else model.to_dict(),
        "checkpoints": entries,
        "warnings": traj.warnings,
    }
    atomic_write_text(out / "series.csv", _series_csv(traj))
    atomic_write_text(out / MANIFEST, _dumps(_clean(manifest)))
    return RunResult(out, traj, cfg, manifest)


def _series_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "energy", "epsilon1", "dissipation", "work", "m"])
    energies = traj.energies
    V = traj.lattice.volume
    for i, f in enumerate(traj.fields):
        eps1 = traj.nu * enstrophy(f) / V
        w.writerow([repr(f.t), repr(float(energies[i])), repr(eps1), repr(float(traj.dissipation[i])),
                    repr(float(traj.work[i])), repr(max_scaled_amplitude(f))])
    return buf.getvalue()


def load_trajectory(run_dir) -> RunResult:
    """Read a run directory back; every checkpoint must be present and intact."""
    run_dir = Path(run_dir)
    mpath = run_dir / MANIFEST
    if not mpath.is_file():
        raise CorruptInputError(f"{run_dir} has no {MANIFEST}")
    try:
        manifest = json.loads(mpath.read_text())
        entries = manifest["checkpoints"]
        cfg = config_from_dict(manifest["config"], base_dir=run_dir)
    except (json.JSONDecodeError, KeyError) as exc:
        raise CorruptInputError(f"{mpath} is malformed: {exc}") from exc
    expected = cfg.n_steps // cfg.checkpoint_every + 1 + (1 if cfg.n_steps % cfg.checkpoint_every else 0)
    if len(entries) != expected:
        raise CorruptInputError(f"{mpath} lists {len(entries)} checkpoints, expected {expected}")
    fm = manifest.get("forcing_model")
    forcing = None
    traj = Trajectory(cfg.lattice, cfg.nu, dt=cfg.dt)
    if fm is not None:
        fm = dict(fm)
        fm["band"] = tuple(fm["band"])
        forcing = Forcing(ForcingModel(**fm), cfg.lattice)
        traj.forcing = forcing
    for e in entries:
        path = run_dir / e["file"]
        if not path.is_file():
            raise CorruptInputError(f"checkpoint {e['index']} (t={e['t']}) is missing: {path}")
        raw = path.read_bytes()
        if hashlib.sha256(raw).hexdigest() != e["sha256"]:
            raise CorruptInputError(f"checkpoint {e['index']} (t={e['t']}) is corrupt: {path}")
        f, _ = read_snapshot(path)
        traj.fields.append(f)
        traj.dissipation.append(e["dissipation"])
        traj.work.append(e["work"])
        traj.force_sup.append(e["force_sup"])
        traj.force_F2.append(e["force_F2"])
        traj.force_Finf.append(e["force_Finf"])
    traj.warnings = list(manifest.get("warnings", []))
    return RunResult(run_dir, traj, cfg, manifest)


def _spectrum_csv(s: EnergySpectrum, realization=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["kappa", "E", "a", "t"] + (["realization"] if realization is not None else [])
    w.writerow(head)
    for k, e in zip(s.centers, s.values):
        row = [repr(float(k)), repr(float(e)), repr(float(s.a)), repr(float(s.t))]
        if realization is not None:
            row.append(realization)
        w.writerow(row)
    return buf.getvalue()


def diagnose(run_dir) -> tuple[int, dict]:
    """Spectra per checkpoint, the series manifest and filtered-norm diagnostics."""
    res = load_trajectory(run_dir)
    traj, cfg = res.trajectory, res.config
    out = res.out_dir
    spectra = spectra_of(traj, cfg.spectrum_a)
    files = []
    for i, (f, s) in enumerate(zip(traj.fields, spectra)):
        name = f"spectra/spectrum_{i:05d}.csv"
        atomic_write_text(out / name, _spectrum_csv(s))
        mass_bins = s.mass()
        mass_modes = spectral_mass(f)
        files.append({"file": name, "t": s.t, "mass_bins": mass_bins, "mass_modes": mass_modes,
                      "epsilon1": dissipation_epsilon1(s, cfg.nu)})
    fc = cfg.filters
    centers = [tuple(c) for c in fc["centers"]] if "centers" in fc else None
    deltas = fc.get("deltas")
    p_grid = [math.inf if p in ("inf", math.inf) else float(p) for p in fc.get("p", P_GRID)]
    rows, checks = filter_report(traj, centers, deltas, p_grid)
    atomic_write_text(out / "filters.csv", rows_to_csv(rows))
    report = {
        "a": spectra[0].a,
        "spectra": files,
        "filter_checks": [c.to_dict() for c in checks],
        "any_failed": any(c.failed for c in checks),
    }
    atomic_write_text(out / "spectra/series.json", _dumps(_clean(report)))
    return (1 if report["any_failed"] else 0), report


def _ledger_for(res: RunResult) -> B.BoundsLedger:
    cfg = res.config
    bc = cfg.bounds
    return build_ledger(
        res.trajectory,
        C0=bc.get("C0", 1.0),
        eps=bc.get("eps", "measured"),
        a=cfg.spectrum_a,
        R=bc.get("R"),
        R1=bc.get("R1"),
        residual_tol=bc.get("residual_tol", 1e-6),
    )


def bounds(run_dir) -> tuple[int, B.BoundsLedger]:
    """Write ledger.json and margins.csv; exit code 1 on any theorem FAIL."""
    res = load_trajectory(run_dir)
    led = _ledger_for(res)
    atomic_write_text(res.out_dir / "ledger.json", _dumps(_clean(led.to_dict())))
    atomic_write_text(res.out_dir / "margins.csv", led.margins_csv())
    return (1 if led.any_failed else 0), led


def _behavior_params(cfg: RunConfig, led: B.BoundsLedger, spectra) -> dict:
    c = led.constants
    bh = cfg.behavior
    eps = c.get("epsilon")
    if eps is None:
        raise ValueError("no positive eps available for the behavior criteria")
    C0 = c["C0"]
    a = spectra[0].a
    lat = cfg.lattice
    window = tuple(bh.get("window", (2 * a, lat.k_cut / 2)))
    return dict(
        window=window,
        horizon=float(bh.get("horizon", c["T"])),
        C1=float(bh.get("C1", bh.get("small_factor", 0.1) * C0 * eps ** (2.0 / 3.0))),
        C0=C0,
        eps=eps,
        theta=float(bh.get("theta", 1.0)),
        slack=float(cfg.bounds.get("slack", 2.0)),
        small_factor=float(bh.get("small_factor", 0.1)),
        R1=c["R1_T"],
        R2=c["R2_T"],
        nu=cfg.nu,
        unforced=not c["forced"],
        k_max=lat.k_cut,
    )


def behavior(run_dir, criterion: str) -> tuple[int, dict]:
    """Evaluate one spectral-behavior criterion with its endpoint consequences."""
    res = load_trajectory(run_dir)
    cfg = res.config
    spectra = spectra_of(res.trajectory, cfg.spectrum_a)
    led = build_ledger(res.trajectory, C0=cfg.bounds.get("C0", 1.0), eps=cfg.bounds.get("eps", "measured"),
                       a=cfg.spectrum_a, R=cfg.bounds.get("R"), R1=cfg.bounds.get("R1"), spectra=spectra)
    params = _behavior_params(cfg, led, spectra)
    v = behavior_report(spectra, criterion, **params)
    d = _clean(v.to_dict())
    d["epsilon_source"] = led.constants["epsilon_source"]
    atomic_write_text(res.out_dir / f"behavior_{criterion}.json", _dumps(d))
    alarm = v.endpoints is not None and v.endpoints["status"] == "IMPOSSIBLE_BY_THEOREM"
    return (1 if alarm else 0), d


def ensemble(cfg: RunConfig, n_seeds: int, out_dir=None, criterion: str = "uniform") -> tuple[int, dict]:
    """Run ``n_seeds`` realizations and compare ensemble-averaged spectra with the bounds."""
    if n_seeds < 1:
        raise ValueError("need at least one realization")
    out = Path(out_dir) if out_dir is not None else cfg.output_path()
    runs, ledgers = [], []
    for i in range(n_seeds):
        c = copy.deepcopy(cfg)
        c.seed = derive_seed(cfg.seed, 1000 + i)
        c.initial.pop("seed", None)
        c.forcing.pop("seed", None)
        res = simulate(c, out / f"realization_{i:03d}")
        runs.append(res)
        led = build_ledger(res.trajectory, C0=cfg.bounds.get("C0", 1.0), eps=cfg.bounds.get("eps", "measured"),
                           a=cfg.spectrum_a, R=cfg.bounds.get("R"), R1=cfg.bounds.get("R1"))
        ledgers.append(led)
        atomic_write_text(res.out_dir / "ledger.json", _dumps(_clean(led.to_dict())))
    per_run = [spectra_of(r.trajectory, cfg.spectrum_a) for r in runs]
    n_ck = len(per_run[0])
    averaged = [ensemble_average_spectrum([sp[j] for sp in per_run]) for j in range(n_ck)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kappa", "E", "a", "t", "realization"])
    for j in range(n_ck):
        for i, sp in enumerate(per_run):
            s = sp[j]
            for k, e in zip(s.centers, s.values):
                w.writerow([repr(float(k)), repr(float(e)), repr(float(s.a)), repr(float(s.t)), i])
        s = averaged[j]
        for k, e in zip(s.centers, s.values):
            w.writerow([repr(float(k)), repr(float(e)), repr(float(s.a)), repr(float(s.t)), "mean"])
    atomic_write_text(out / "ensemble_spectra.csv", buf.getvalue())

    R1 = np.max([led.series["R1"] for led in ledgers], axis=0)
    R2 = max(led.constants["R2_T"] for led in ledgers)
    T = ledgers[0].constants["T"]
    thm4 = B.check_thm4(averaged, R1, name="ensemble_spectrum_envelope")
    thm5 = B.check_thm5(time_average_spectrum(averaged), R2, cfg.nu, T, name="ensemble_time_average_decay")
    eps_vals = [led.constants["epsilon"] for led in ledgers if led.constants.get("epsilon")]
    report = {
        "realizations": n_seeds,
        "seeds": [r.config.seed for r in runs],
        "checks": [thm4.to_dict(), thm5.to_dict()],
        "per_realization_failed": [led.any_failed for led in ledgers],
    }
    if eps_vals:
        eps = float(np.mean(eps_vals))
        C0 = cfg.bounds.get("C0", 1.0)
        a = averaged[0].a
        bh = cfg.behavior
        window = tuple(bh.get("window", (2 * a, cfg.lattice.k_cut / 2)))
        v = behavior_report(
            averaged, criterion, window=window, horizon=float(bh.get("horizon", T)),
            C1=float(bh.get("C1", 0.1 * C0 * eps ** (2.0 / 3.0))), C0=C0, eps=eps,
            theta=float(bh.get("theta", 1.0)), slack=float(cfg.bounds.get("slack", 2.0)),
            R1=float(R1[-1]), R2=R2, nu=cfg.nu, unforced=not ledgers[0].constants["forced"],
            k_max=cfg.lattice.k_cut,
        )
        report["behavior"] = v.to_dict()
    failed = thm4.failed or thm5.failed or any(report["per_realization_failed"])
    report["any_failed"] = failed
    atomic_write_text(out / "ensemble_report.json", _dumps(_clean(report)))
    return (1 if failed else 0), report


def oracle(snapshot_path, n_targets: int = 24, seed: int = 0, tol: float = 1e-12) -> tuple[int, dict]:
    """Compare the pseudo-spectral nonlinear term with the direct convolution on a snapshot.

    Lattices with at most 8 points per axis are checked on every mode; larger
    ones on ``n_targets`` retained modes drawn with ``seed``.
    """
    f, _ = read_snapshot(snapshot_path)
    lat = f.lattice
    fast = nonlinear_term(f)
    if max(lat.shape) <= 8:
        targets = None
        count = int(lat.retained.sum())
    else:
        idx = np.argwhere(lat.retained)
        pick = np.random.default_rng(seed).choice(len(idx), size=min(n_targets, len(idx)), replace=False)
        targets = [tuple(int(x) for x in idx[p]) for p in sorted(pick)]
        count = len(targets)
    rel = oracle_relative_error(f, fast, targets)
    report = {"snapshot": str(snapshot_path), "modes_checked": count,
              "relative_error": rel, "tolerance": tol, "verdict": B.PASS if rel <= tol else B.FAIL}
    return (0 if rel <= tol else 1), report
