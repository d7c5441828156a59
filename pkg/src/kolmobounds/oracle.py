"""Brute-force Galerkin convolution, an independent check of the pseudo-spectral product.

Cost is O(M^2) in the number M of retained modes, so it is meant for N <= 8
(M = 80 on the default 8^3 lattice) or a handful of target modes on larger grids.
"""
from __future__ import annotations

import math

import numpy as np

from .lattice import Lattice, SpectralField, leray_project

__all__ = ["retained_modes", "convolution_term", "oracle_relative_error"]


def retained_modes(lattice: Lattice) -> list[tuple[tuple[int, int, int], np.ndarray]]:
    """(array index, wavevector) for every retained mode, in FFT index order."""
    idx = np.argwhere(lattice.retained)
    k = lattice.k
    return [(tuple(int(i) for i in ix), k[(slice(None),) + tuple(ix)].copy()) for ix in idx]


def convolution_term(f: SpectralField, targets=None) -> np.ndarray:
    """-i P_k [k . (1/sqrt(V)) sum_{k1} u_hat(k - k1) (x) u_hat(k1)] by direct summation.

    Only pairs with both k1 and k - k1 retained contribute.  ``targets`` limits
    the output to a subset of array indices; other entries are left at zero.
    """
    lat = f.lattice
    c = f.coeffs
    modes = retained_modes(lat)
    lookup = {ix: kv for ix, kv in modes}
    out = lat.zeros()
    inv_sqrt_v = 1.0 / math.sqrt(lat.volume)
    wanted = modes if targets is None else [(tuple(t), lat.k[(slice(None),) + tuple(t)]) for t in targets]
    for ix, kv in wanted:
        if not lat.retained[ix]:
            continue
        acc = np.zeros(3, dtype=complex)
        for jx, k1 in modes:
            dx = tuple((a - b) % n for a, b, n in zip(ix, jx, lat.shape))
            if dx not in lookup:
                continue
            a = c[(slice(None),) + dx]
            b = c[(slice(None),) + jx]
            acc += (kv @ a) * b
        out[(slice(None),) + ix] = -1j * leray_project(kv, acc * inv_sqrt_v)
    return out


def oracle_relative_error(f: SpectralField, fast: np.ndarray, targets=None) -> float:
    """max |fast - oracle| / max |oracle| over all retained modes or ``targets``.

    When the oracle is negligible (a Beltrami field, say) the denominator
    falls back to k_cut * sum |u_hat|^2 / sqrt(V), which bounds |N(k)| by
    Cauchy-Schwarz, so round-off is not reported as a large relative error.
    """
    lat = f.lattice
    ref = convolution_term(f, targets)
    if targets is None:
        mask = lat.retained
    else:
        mask = np.zeros(lat.shape, dtype=bool)
        for t in targets:
            mask[tuple(t)] = True
    scale = float(np.max(np.abs(ref[:, mask]), initial=0.0))
    natural = lat.k_cut * f.energy() / math.sqrt(lat.volume)
    if scale <= 1e-8 * natural:
        scale = natural
    diff = float(np.max(np.abs(fast[:, mask] - ref[:, mask]), initial=0.0))
    return diff / scale if scale > 0 else diff
