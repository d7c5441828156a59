"""How far can a -5/3 range reach?

The trapping constants cap the spectrum from above in two ways: a flat
envelope 4 pi R1^2 and a time-averaged envelope decaying like kappa^-2.  A
Kolmogorov spectrum C0 eps^(2/3) kappa^(-5/3) can only sit under both between
kappa1_bar and kappa2_bar.  This script tabulates that window as the horizon
T grows and shows it closing at T0.

Run with ``python3 demos/03_inertial_range_limits.py``.
"""
import numpy as np

from kolmobounds import T0, epsilon_max, kappa1_bar, kappa2_bar, r_nu

C0, nu, eps, R1, R2 = 1.5, 1e-3, 0.05, 2.0, 6.0
k1 = kappa1_bar(C0, eps, R1)
horizon = T0(C0, nu, eps, R1, R2)
print(f"kappa1_bar = {k1:.4g}, window closes at T0 = {horizon:.4g}")
print(f"{'T':>10} {'kappa2_bar':>12} {'r_nu':>10} {'eps_max':>10}")
for T in horizon * np.logspace(-3, 0.5, 8):
    k2 = kappa2_bar(C0, nu, eps, R2, T)
    print(f"{T:10.4g} {k2:12.4g} {r_nu(k1, k2):10.4g} {epsilon_max(C0, nu, R1, R2, T):10.4g}")
