"""Utilities, probability weights and risk spectra used by the risk measures.

Every object here is a small frozen dataclass around vectorised callables so a
risk specification can be built from a config entry such as ``"tversky-plus"``,
``{"name": "linear", "slope": 2}`` or ``"power-spectrum(3)"``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Utility:
    """Increasing, differentiable map with known derivative bounds.

    ``slope_min``/``slope_max`` bound the derivative on the region where the
    function is not identically zero (the positive half-line for a gain
    utility, the negative half-line for a loss utility, all of R otherwise).
    """

    name: str
    fn: ArrayFn = field(repr=False)
    deriv: ArrayFn = field(repr=False)
    slope_min: float
    slope_max: float
    params: tuple = ()

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    @property
    def lipschitz(self) -> float:
        return self.slope_max


@dataclass(frozen=True)
class Weight:
    """Probability distortion ``w: [0, 1] -> [0, 1]`` with w(0)=0, w(1)=1.

    ``holder`` is an optional ``(L, exponent)`` pair certifying
    |w(p) - w(q)| <= L |p - q|**exponent.
    """

    name: str
    fn: ArrayFn = field(repr=False)
    holder: tuple[float, float] | None = None
    params: tuple = ()

    def __call__(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
        return self.fn(p)

    def dual(self) -> "Weight":
        """The weight ``p -> 1 - w(1 - p)``."""
        base = self.fn
        return Weight(f"dual({self.name})", lambda p: 1.0 - base(1.0 - p),
                      self.holder, self.params)


@dataclass(frozen=True)
class Spectrum:
    """Risk spectrum consumed through its antiderivative ``Phi(b) = int_0^b phi``."""

    name: str
    antiderivative: ArrayFn = field(repr=False)
    sup: float
    params: tuple = ()

    def __call__(self, beta):
        return self.antiderivative(np.asarray(beta, dtype=float))

    @property
    def total(self) -> float:
        return float(self.antiderivative(np.array(1.0)))


# -- utilities ---------------------------------------------------------------

def identity_utility() -> Utility:
    return Utility("identity", lambda x: x, np.ones_like, 1.0, 1.0)


def linear_utility(slope: float) -> Utility:
    if slope <= 0:
        raise ValueError(f"linear utility needs slope > 0, got {slope}")
    return Utility("linear", lambda x: slope * x,
                   lambda x: np.full_like(x, slope, dtype=float),
                   slope, slope, (slope,))


def exp_clipped_utility(lo: float, hi: float) -> Utility:
    """``e^x`` on [lo, hi], extended linearly outside so it stays Lipschitz."""
    if not lo < hi:
        raise ValueError(f"exp-clipped needs lo < hi, got ({lo}, {hi})")
    elo, ehi = math.exp(lo), math.exp(hi)

    def fn(x):
        return np.where(x < lo, elo + elo * (x - lo),
                        np.where(x > hi, ehi + ehi * (x - hi),
                                 np.exp(np.clip(x, lo, hi))))

    def deriv(x):
        return np.exp(np.clip(x, lo, hi))

    return Utility("exp-clipped", fn, deriv, elo, ehi, (lo, hi))


def piecewise_linear_utility(slope_neg: float, slope_pos: float) -> Utility:
    """Kinked utility with slope ``slope_neg`` below 0 and ``slope_pos`` above."""
    if slope_neg <= 0 or slope_pos <= 0:
        raise ValueError("piecewise-linear slopes must be positive")

    def fn(x):
        return np.where(x < 0, slope_neg * x, slope_pos * x)

    def deriv(x):
        return np.where(x < 0, slope_neg, slope_pos).astype(float)

    return Utility("piecewise-linear", fn, deriv, min(slope_neg, slope_pos),
                   max(slope_neg, slope_pos), (slope_neg, slope_pos))


def gain_utility(base: Utility) -> Utility:
    """``x -> base(max(x, 0))`` for a base utility with base(0) = 0."""
    f, d = base.fn, base.deriv
    return Utility(f"gain({base.name})",
                   lambda x: f(np.maximum(x, 0.0)),
                   lambda x: np.where(x > 0, d(np.maximum(x, 0.0)), 0.0),
                   base.slope_min, base.slope_max, base.params)


def loss_utility(base: Utility) -> Utility:
    """``x -> -base(min(x, 0))``, nonnegative and decreasing on x < 0."""
    f, d = base.fn, base.deriv
    return Utility(f"loss({base.name})",
                   lambda x: -f(np.minimum(x, 0.0)),
                   lambda x: np.where(x < 0, -d(np.minimum(x, 0.0)), 0.0),
                   base.slope_min, base.slope_max, base.params)


# -- weights -----------------------------------------------------------------

def identity_weight() -> Weight:
    return Weight("identity", lambda p: p, (1.0, 1.0))


def tversky_weight(gamma: float, holder: tuple[float, float] | None = None) -> Weight:
    """Tversky-Kahneman inverse-S weight ``p^g / (p^g + (1-p)^g)^(1/g)``."""
    if not 0 < gamma <= 1:
        raise ValueError(f"tversky exponent must lie in (0, 1], got {gamma}")

    def fn(p):
        a, b = p ** gamma, (1.0 - p) ** gamma
        return a / (a + b) ** (1.0 / gamma)

    return Weight("tversky", fn, holder, (gamma,))


# exponents from the Tversky-Kahneman fit; Hoelder data is nominal configuration
TVERSKY_GAIN = 0.61
TVERSKY_LOSS = 0.69
NOMINAL_HOLDER = (2.0, 0.61)


def power_weight(g: float) -> Weight:
    """``w(p) = p^g``; Hoelder with exponent min(g, 1)."""
    if g <= 0:
        raise ValueError("power weight exponent must be positive")
    holder = (1.0, g) if g <= 1 else (g, 1.0)
    return Weight("power", lambda p: p ** g, holder, (g,))


def prelec_weight(g: float) -> Weight:
    """``w(p) = exp(-(-log p)^g)``."""
    if g <= 0:
        raise ValueError("prelec exponent must be positive")

    def fn(p):
        with np.errstate(divide="ignore"):
            out = np.exp(-(-np.log(p)) ** g)
        return np.where(p <= 0, 0.0, out)

    return Weight("prelec", fn, None, (g,))


# -- spectra -----------------------------------------------------------------

def constant_spectrum(level: float = 1.0) -> Spectrum:
    return Spectrum("constant", lambda b: level * b, level, (level,))


def cvar_spectrum(alpha: float) -> Spectrum:
    """``phi = (1 - alpha)^-1 1{beta >= alpha}``; reproduces CVaR at alpha."""
    if not 0 < alpha < 1:
        raise ValueError(f"cvar spectrum level must lie in (0, 1), got {alpha}")
    return Spectrum("cvar-spectrum",
                    lambda b: np.maximum(b - alpha, 0.0) / (1.0 - alpha),
                    1.0 / (1.0 - alpha), (alpha,))


def power_spectrum(k: float) -> Spectrum:
    """``phi(beta) = k beta^(k-1)`` for k >= 1, so Phi(beta) = beta^k."""
    if k < 1:
        raise ValueError(f"power spectrum needs k >= 1, got {k}")
    return Spectrum("power-spectrum", lambda b: b ** k, float(k), (k,))


def table_spectrum(knots, values, n_knots: int = 10_000) -> Spectrum:
    """Spectrum from a table of phi values, trapezoid-integrated on a fine grid."""
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
        raise ValueError("spectrum table needs matching 1-d knots and values")
    if np.any(np.diff(knots) <= 0):
        raise ValueError("spectrum knots must be strictly increasing")
    if knots[0] > 0 or knots[-1] < 1:
        raise ValueError("spectrum table must cover [0, 1]")
    if np.any(values < 0):
        raise ValueError("spectrum values must be nonnegative")
    grid = np.linspace(0.0, 1.0, n_knots + 1)
    phi = np.interp(grid, knots, values)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (phi[1:] + phi[:-1]) * np.diff(grid))])
    return Spectrum("table", lambda b: np.interp(b, grid, cum), float(values.max()))


# -- registry ----------------------------------------------------------------

_UTILITIES: dict[str, Callable[..., Utility]] = {
    "identity": identity_utility,
    "linear": linear_utility,
    "exp-clipped": exp_clipped_utility,
    "piecewise-linear": piecewise_linear_utility,
}

_WEIGHTS: dict[str, Callable[..., Weight]] = {
    "identity": identity_weight,
    "tversky-plus": lambda: tversky_weight(TVERSKY_GAIN, NOMINAL_HOLDER),
    "tversky-minus": lambda: tversky_weight(TVERSKY_LOSS, NOMINAL_HOLDER),
    "tversky": tversky_weight,
    "power": power_weight,
    "prelec": prelec_weight,
}

_SPECTRA: dict[str, Callable[..., Spectrum]] = {
    "constant": constant_spectrum,
    "cvar-spectrum": cvar_spectrum,
    "power-spectrum": power_spectrum,
}

_CALL = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*$")


def _parse_entry(entry: Any) -> tuple[str, list, dict]:
    if isinstance(entry, str):
        m = _CALL.match(entry)
        if not m:
            raise ValueError(f"cannot parse function reference {entry!r}")
        name, argstr = m.group(1), m.group(2)
        args = [float(a) for a in argstr.split(",")] if argstr and argstr.strip() else []
        return name, args, {}
    if isinstance(entry, Mapping):
        kw = dict(entry)
        try:
            name = kw.pop("name")
        except KeyError:
            raise ValueError(f"function reference {entry!r} has no 'name'") from None
        return str(name), [], kw
    raise ValueError(f"function reference must be a string or mapping, got {entry!r}")


def _lookup(table: Mapping[str, Callable], kind: str, entry: Any):
    name, args, kw = _parse_entry(entry)
    if name not in table:
        raise ValueError(f"unknown {kind} {name!r}; known: {sorted(table)}")
    try:
        return table[name](*args, **kw)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind} {name!r}: {exc}") from None


def make_utility(entry: Any) -> Utility:
    if isinstance(entry, Utility):
        return entry
    return _lookup(_UTILITIES, "utility", entry)


def make_weight(entry: Any) -> Weight:
    if isinstance(entry, Weight):
        return entry
    return _lookup(_WEIGHTS, "weight", entry)


def make_spectrum(entry: Any) -> Spectrum:
    if isinstance(entry, Spectrum):
        return entry
    if isinstance(entry, Mapping) and entry.get("name") == "table":
        return table_spectrum(entry["knots"], entry["values"])
    return _lookup(_SPECTRA, "spectrum", entry)
