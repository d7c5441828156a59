"""Trapping set, spectrum envelopes and filtered norms on a forced run.

The script runs the CLI pipeline end to end on ``configs/forced.toml``:
simulate, then the bound ledger, then spectra and filter diagnostics.  Each
stage writes its artefacts into the run directory; the summary printed here
reads them back.

Run with ``python3 demos/02_trapping_and_spectra.py [out_dir]``.
"""
import json
import sys
import tempfile
from pathlib import Path

from kolmobounds.cli import main

here = Path(__file__).resolve().parent
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="kolmobounds-demo-"))

assert main(["simulate", str(here / "configs" / "forced.toml"), "--out", str(out)]) == 0
print()
code = main(["bounds", str(out)])
print()
main(["diagnose", str(out)])

ledger = json.loads((out / "ledger.json").read_text())
c = ledger["constants"]
print()
print(f"R1(0) = {c['R1_0']:.4g}, R1(T) = {c['R1_T']:.4g}, R2(T) = {c['R2_T']:.4g}")
print(f"eps = {c['epsilon']:.4g} ({c['epsilon_source']}), inertial range [{c['kappa1_bar']:.3g}, {c['kappa2_bar']:.3g}]")
print(f"artefacts in {out}; bounds exit code {code}")
