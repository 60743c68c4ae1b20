"""First-order Wasserstein distance between empirical distributions."""
from __future__ import annotations

import numpy as np

from .distributions import Edf


def w1_edf(F: Edf, G: Edf) -> float:
    """W1 as the integral of |F - G| over the merged breakpoints.

    Both CDFs are constant between consecutive breakpoints, so the integral is
    a finite sum.  With equal sample counts this reduces to the mean absolute
    difference of the order statistics.
    """
    grid = np.union1d(F.samples, G.samples)
    gap = np.abs(F(grid[:-1]) - G(grid[:-1]))
    return float(np.dot(gap, np.diff(grid)))


def w1_quantile(F: Edf, G: Edf) -> float:
    """W1 as the integral over (0, 1] of |F^-1 - G^-1|.

    The generalised inverses are constant on the cells between consecutive
    levels of {i/n} and {j/m}; each cell is evaluated at its midpoint.
    """
    n, m = F.n, G.n
    levels = np.union1d(np.arange(n + 1) / n, np.arange(m + 1) / m)
    mid = 0.5 * (levels[1:] + levels[:-1])
    qf = F.samples[np.floor(n * mid).astype(int)]
    qg = G.samples[np.floor(m * mid).astype(int)]
    return float(np.dot(np.abs(qf - qg), np.diff(levels)))
