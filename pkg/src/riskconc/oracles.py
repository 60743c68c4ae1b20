"""Slow brute-force reference computations used to cross-check the estimators.

These deliberately avoid the closed forms in :mod:`riskconc.risk` and
:mod:`riskconc.wasserstein`.
"""
from __future__ import annotations

import numpy as np

from .distributions import Edf


def w1_grid(F: Edf, G: Edf, lo: float, hi: float, step: float = 1e-4) -> float:
    """Midpoint-rule integral of |F - G| over [lo, hi]; both supports must lie inside."""
    m = int(round((hi - lo) / step))
    z = lo + (np.arange(m) + 0.5) * step
    return float(np.abs(_cdf_count(F, z) - _cdf_count(G, z)).sum() * step)


def _cdf_count(F: Edf, z: np.ndarray) -> np.ndarray:
    # counting through a boolean matrix in blocks keeps this independent of searchsorted
    x = F.samples
    out = np.empty(z.size)
    block = max(1, 2_000_000 // max(x.size, 1))
    for s in range(0, z.size, block):
        out[s:s + block] = (x[None, :] <= z[s:s + block, None]).mean(axis=1)
    return out


def cvar_grid(F: Edf, alpha: float, lo: float, hi: float, step: float = 1e-4) -> float:
    """Minimise xi + mean((x - xi)+) / (1 - alpha) over a grid of xi."""
    xi = np.arange(lo, hi + step / 2, step)
    x = F.samples  # ascending
    # mean((x - xi)+) = (sum of x above xi - count above xi * xi) / n via suffix sums
    suffix = np.concatenate([np.cumsum(x[::-1])[::-1], [0.0]])
    above = np.searchsorted(x, xi, side="right")
    excess = (suffix[above] - (x.size - above) * xi) / x.size
    return float(np.min(xi + excess / (1.0 - alpha)))


def rdeu_direct(F: Edf, u, w) -> float:
    """sum_i u(x_(i)) [w(i/n) - w((i-1)/n)] as an explicit loop."""
    x, n = F.samples, F.n
    total = 0.0
    for i in range(1, n + 1):
        total += float(u(x[i - 1])) * (float(w(i / n)) - float(w((i - 1) / n)))
    return total
