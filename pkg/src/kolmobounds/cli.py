"""Command-line entry point: ``kolmobounds <command> ...``.

Exit codes
    0  every theorem check passed or had unmet hypotheses
    1  a gating theorem check failed (or the oracle disagreed)
    2  bad configuration or missing/corrupt input
    3  the integrator stopped: CFL violation or non-finite state
"""
from __future__ import annotations

import argparse
import math
import sys

from . import pipeline
from .analysis import CRITERIA
from .dynamics import BlowupError, CFLError
from .io import ConfigError, CorruptInputError, load_config

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


def _table(rows, headers) -> str:
    cells = [[str(h) for h in headers]] + [[_fmt(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6g}"
    return str(x)


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    res = pipeline.simulate(cfg, args.out)
    traj = res.trajectory
    E = traj.energies
    print(f"wrote {len(traj)} checkpoints to {res.out_dir}")
    print(_table([[f.t, float(E[i]), float(traj.dissipation[i]), float(traj.work[i])]
                  for i, f in enumerate(traj.fields)], ["t", "energy", "dissipation", "work"]))
    for w in traj.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    code, rep = pipeline.diagnose(args.run_dir)
    print(f"spectra: {len(rep['spectra'])} files, bin width a = {rep['a']:.6g}")
    print(_table([[c["name"], c["verdict"], c["margin"]] for c in rep["filter_checks"]],
                 ["check", "verdict", "margin"]))
    return code


def _cmd_bounds(args) -> int:
    code, led = pipeline.bounds(args.run_dir)
    print(_table([[c.name, c.verdict, c.margin, "yes" if c.gating else "no"] for c in led.checks],
                 ["check", "verdict", "margin", "gating"]))
    for n in led.notes:
        print(f"note: {n}")
    return code


def _cmd_behavior(args) -> int:
    code, d = pipeline.behavior(args.run_dir, args.criterion)
    print(f"{d['criterion']}: deviation {d['deviation']:.6g} vs C1 {d['C1']:.6g} -> {d['verdict']}")
    ep = d.get("endpoints")
    if ep:
        print(f"endpoints: {ep['status']} (kappa1_bar {ep['kappa1_bar']:.6g}, kappa2_bar {ep['kappa2_bar']:.6g})")
    return code


def _cmd_ensemble(args) -> int:
    cfg = load_config(args.config)
    code, rep = pipeline.ensemble(cfg, args.n_seeds, args.out, args.criterion)
    print(_table([[c["name"], c["verdict"], c["margin"]] for c in rep["checks"]], ["check", "verdict", "margin"]))
    if "behavior" in rep:
        b = rep["behavior"]
        print(f"{b['criterion']} on the ensemble mean: {b['verdict']}")
    return code


def _cmd_oracle(args) -> int:
    code, rep = pipeline.oracle(args.snapshot, args.targets, args.seed)
    print(f"{rep['modes_checked']} modes, relative error {rep['relative_error']:.3e} -> {rep['verdict']}")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kolmobounds", description="Spectral Navier-Stokes runs checked against rigorous spectrum bounds.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="integrate a configured run and write checkpoints")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (overrides config and environment)")
    s.set_defaults(func=_cmd_simulate)

    s = sub.add_parser("diagnose", help="energy spectra and filtered-norm diagnostics for a run")
    s.add_argument("run_dir")
    s.set_defaults(func=_cmd_diagnose)

    s = sub.add_parser("bounds", help="evaluate the theorem ledger for a run")
    s.add_argument("run_dir")
    s.set_defaults(func=_cmd_bounds)

    s = sub.add_parser("behavior", help="test a run against a -5/3 spectral-behavior criterion")
    s.add_argument("run_dir")
    s.add_argument("criterion", choices=sorted(CRITERIA))
    s.set_defaults(func=_cmd_behavior)

    s = sub.add_parser("ensemble", help="run several seeds and check ensemble-averaged spectra")
    s.add_argument("config")
    s.add_argument("n_seeds", type=int)
    s.add_argument("--out")
    s.add_argument("--criterion", choices=sorted(CRITERIA), default="uniform")
    s.set_defaults(func=_cmd_ensemble)

    s = sub.add_parser("oracle", help="compare the fast nonlinear term with direct convolution on a snapshot")
    s.add_argument("snapshot")
    s.add_argument("--targets", type=int, default=24, help="modes sampled when N > 8")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CorruptInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BlowupError as exc:
        print(f"error: {exc}; last good state written as blowup_last_good.spb", file=sys.stderr)
        return EXIT_SOLVER
    except CFLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
