"""Exact decay of an ABC flow.

The nonlinear term of a Beltrami field is a pure gradient, so after Leray
projection it vanishes and each mode decays at its own viscous rate.  The
solver should reproduce that to round-off.

Run with ``python3 demos/01_beltrami_decay.py``.
"""
import numpy as np

from kolmobounds import Lattice, Solver, abc_flow

lat = Lattice.cubic(32)
nu = 0.1
f0 = abc_flow(lat, A=1.0, B=0.7, C=0.4)
traj = Solver(f0, nu, dt=0.01).run(100, checkpoint_every=25)

print(f"{'t':>6} {'energy':>12} {'exact':>12} {'max rel err':>12}")
for f in traj.fields:
    exact = np.exp(-nu * lat.k2 * f.t) * f0.coeffs
    err = np.max(np.abs(f.coeffs - exact)) / np.max(np.abs(exact))
    e_exact = f0.energy() * np.exp(-2 * nu * f.t)
    print(f"{f.t:6.2f} {f.energy():12.8f} {e_exact:12.8f} {err:12.2e}")
