"""Risk measures evaluated on finite distributions.

Each estimator applies the risk measure to an empirical distribution, so
``cvar(Edf(xs), a)`` is both the plug-in estimate from the sample ``xs`` and
the exact CVaR of the uniform law on ``xs``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .distributions import HEAVY_TAIL, SUB_EXPONENTIAL, SUB_GAUSSIAN, DistSpec, Edf, truncate
from .functions import (
    NOMINAL_HOLDER,
    Spectrum,
    Utility,
    Weight,
    gain_utility,
    identity_utility,
    loss_utility,
    make_spectrum,
    make_utility,
    make_weight,
)

TYPE1_KINDS = ("cvar", "srm", "ubsr")
TYPE2_KINDS = ("cpt", "rdeu")


class BracketError(RuntimeError):
    """Bisection could not bracket the shortfall root."""

    def __init__(self, msg: str, bracket: tuple[float, float]):
        super().__init__(f"{msg}; final bracket {bracket}")
        self.bracket = bracket


@dataclass(frozen=True)
class Type2Constants:
    L1: float
    L2: float
    L3: float
    a1: float
    a2: float
    a3: float
    K1: float
    K2: float
    gamma: float


@dataclass(frozen=True)
class RiskSpec:
    """Which risk measure, with its parameters.

    Build with the classmethods (``RiskSpec.cvar(0.95)`` etc.) or from a config
    mapping with :meth:`from_config`.
    """

    kind: str
    alpha: float | None = None
    spectrum: Spectrum | None = None
    utility: Utility | None = None
    target: float | None = None
    u_plus: Utility | None = None
    u_minus: Utility | None = None
    w_plus: Weight | None = None
    w_minus: Weight | None = None
    u: Utility | None = None
    w: Weight | None = None
    holder: tuple[float, float] | None = None
    one_sided: bool = False
    extra: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        k = self.kind
        if k == "cvar":
            if self.alpha is None or not 0 < self.alpha < 1:
                raise ValueError(f"cvar level must lie in (0, 1), got {self.alpha}")
        elif k == "srm":
            if self.spectrum is None:
                raise ValueError("srm needs a spectrum")
        elif k == "ubsr":
            if self.utility is None or self.target is None:
                raise ValueError("ubsr needs a utility and a target level")
        elif k == "cpt":
            if None in (self.u_plus, self.u_minus, self.w_plus, self.w_minus):
                raise ValueError("cpt needs u_plus, u_minus, w_plus, w_minus")
        elif k == "rdeu":
            if self.u is None or self.w is None:
                raise ValueError("rdeu needs a utility u and a weight w")
        else:
            raise ValueError(f"unknown risk kind {k!r}")
        if k in TYPE2_KINDS:
            utils = (self.u_plus, self.u_minus) if k == "cpt" else (self.u,)
            for ut in utils:
                if abs(float(ut(0.0))) > 1e-12:
                    raise ValueError(f"utility {ut.name} must vanish at 0")
            weights = (self.w_plus, self.w_minus) if k == "cpt" else (self.w,)
            for wt in weights:
                ends = wt(np.array([0.0, 1.0]))
                if abs(ends[0]) > 1e-12 or abs(ends[1] - 1) > 1e-12:
                    raise ValueError(f"weight {wt.name} must satisfy w(0)=0 and w(1)=1")
                grid = wt(np.linspace(0, 1, 1001))
                if np.any(np.diff(grid) < -1e-12):
                    raise ValueError(f"weight {wt.name} must be nondecreasing")
            if self.holder is None:
                object.__setattr__(self, "holder", _combined_holder(weights))
            L, a = self.holder
            if L <= 0 or not 0 < a <= 1:
                raise ValueError(f"Hoelder data must have L > 0 and exponent in (0, 1], got {self.holder}")

    # -- constructors --------------------------------------------------------
    @classmethod
    def cvar(cls, alpha: float) -> "RiskSpec":
        return cls("cvar", alpha=alpha)

    @classmethod
    def srm(cls, spectrum: Any) -> "RiskSpec":
        return cls("srm", spectrum=make_spectrum(spectrum))

    @classmethod
    def ubsr(cls, utility: Any, target: float) -> "RiskSpec":
        return cls("ubsr", utility=make_utility(utility), target=float(target))

    @classmethod
    def cpt(cls, u_plus: Any = "identity", u_minus: Any = "identity",
            w_plus: Any = "tversky-plus", w_minus: Any = "tversky-minus",
            holder: tuple[float, float] | None = None, one_sided: bool = False) -> "RiskSpec":
        """CPT-value; ``u_plus``/``u_minus`` name base utilities applied to the
        gain and loss parts (``identity`` gives x+ and x-)."""
        return cls("cpt", u_plus=gain_utility(make_utility(u_plus)),
                   u_minus=loss_utility(make_utility(u_minus)),
                   w_plus=make_weight(w_plus), w_minus=make_weight(w_minus),
                   holder=holder, one_sided=one_sided)

    @classmethod
    def rdeu(cls, u: Any = "identity", w: Any = "identity",
             holder: tuple[float, float] | None = None) -> "RiskSpec":
        return cls("rdeu", u=make_utility(u), w=make_weight(w), holder=holder)

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "RiskSpec":
        cfg = dict(cfg)
        kind = cfg.pop("kind", None)
        holder = cfg.pop("holder", None)
        if isinstance(holder, Mapping):
            holder = (float(holder["L"]), float(holder["alpha"]))
        elif holder is not None:
            holder = tuple(float(h) for h in holder)
        if kind == "cvar":
            out = cls.cvar(float(cfg.pop("alpha")))
        elif kind == "srm":
            out = cls.srm(cfg.pop("spectrum"))
        elif kind == "ubsr":
            out = cls.ubsr(cfg.pop("utility", "identity"), float(cfg.pop("target")))
        elif kind == "cpt":
            out = cls.cpt(cfg.pop("u_plus", "identity"), cfg.pop("u_minus", "identity"),
                          cfg.pop("w_plus", "tversky-plus"), cfg.pop("w_minus", "tversky-minus"),
                          holder, bool(cfg.pop("one_sided", False)))
        elif kind == "rdeu":
            out = cls.rdeu(cfg.pop("u", "identity"), cfg.pop("w", "identity"), holder)
        else:
            raise ValueError(f"unknown risk kind {kind!r}")
        if cfg:
            raise ValueError(f"unexpected keys for {kind}: {sorted(cfg)}")
        return out

    # -- derived data --------------------------------------------------------
    @property
    def is_type1(self) -> bool:
        return self.kind in TYPE1_KINDS

    @property
    def type1_constants(self) -> tuple[float, float]:
        """(L, kappa) with |rho(F) - rho(G)| <= L W1(F, G)^kappa."""
        if self.kind == "cvar":
            return 1.0 / (1.0 - self.alpha), 1.0
        if self.kind == "srm":
            return self.spectrum.sup, 1.0
        if self.kind == "ubsr":
            return self.utility.lipschitz, 1.0
        raise ValueError(f"{self.kind} is not a Type-1 measure")

    def cpt_functions(self) -> tuple[Utility, Utility, Weight, Weight]:
        """(u+, u-, w+, w-); for RDEU this is the CPT embedding of (u, w)."""
        if self.kind == "cpt":
            return self.u_plus, self.u_minus, self.w_plus, self.w_minus
        if self.kind == "rdeu":
            return gain_utility(self.u), loss_utility(self.u), self.w.dual(), self.w
        raise ValueError(f"{self.kind} has no CPT form")

    @property
    def derivative_bounds(self) -> tuple[float, float, float, float]:
        """(k+, K+, k-, K-)."""
        up, um, _, _ = self.cpt_functions()
        return up.slope_min, up.slope_max, um.slope_min, um.slope_max

    @property
    def type2_constants(self) -> Type2Constants:
        kp, Kp, km, Km = self.derivative_bounds
        L, a = self.holder
        return Type2Constants(L1=(Kp + Km) * L, L2=L * Kp, L3=L * Km,
                              a1=a, a2=a, a3=a, K1=kp / Kp, K2=km / Km, gamma=1.0 - a)


def _combined_holder(weights) -> tuple[float, float]:
    pairs = [w.holder for w in weights]
    if any(p is None for p in pairs):
        return NOMINAL_HOLDER
    # on [0, 1] an exponent-a Hoelder bound implies every smaller exponent
    return max(p[0] for p in pairs), min(p[1] for p in pairs)


# -- estimators on EDFs ------------------------------------------------------

def _edf_levels(n: int) -> np.ndarray:
    return np.arange(n + 1) / n


def cvar(F: Edf, alpha: float) -> float:
    """CVaR of the empirical law: inf over xi of xi + E(X - xi)+ / (1 - alpha)."""
    if not 0 < alpha < 1:
        raise ValueError(f"cvar level must lie in (0, 1), got {alpha}")
    x, n = F.samples, F.n
    na = n * alpha
    k = int(round(na)) if abs(na - round(na)) < 1e-9 else math.ceil(na)
    var = x[min(max(k, 1), n) - 1]
    return float(var + np.maximum(x - var, 0.0).sum() / (n * (1.0 - alpha)))


def srm(F: Edf, spectrum: Any) -> float:
    """Spectral risk: sum_i x_(i) (Phi(i/n) - Phi((i-1)/n))."""
    spec = make_spectrum(spectrum)
    w = np.diff(spec(_edf_levels(F.n)))
    return float(np.dot(F.samples, w))


def ubsr(F: Edf, utility: Any, target: float, bracket: tuple[float, float] | None = None,
         tol: float = 1e-10, max_doublings: int = 60) -> float:
    """Smallest xi with mean(l(x_i - xi)) <= target, by bisection.

    ``l`` must be increasing, which makes the constraint function
    nonincreasing in xi.
    """
    l = make_utility(utility)
    x = F.samples

    def g(xi):
        return float(np.mean(l(x - xi)))

    lo, hi = bracket if bracket is not None else (x[0] - 1.0, x[-1] + 1.0)
    width = hi - lo
    for _ in range(max_doublings):
        if g(lo) > target:
            break
        lo -= width
        width *= 2
    else:
        raise BracketError("could not find xi with g(xi) > target", (lo, hi))
    width = hi - lo
    for _ in range(max_doublings):
        if g(hi) <= target:
            break
        hi += width
        width *= 2
    else:
        raise BracketError("could not find xi with g(xi) <= target", (lo, hi))
    # invariant: g(lo) > target >= g(hi)
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) <= target:
            hi = mid
        else:
            lo = mid
    return float(hi)


def cpt(F: Edf, u_plus, u_minus, w_plus, w_minus) -> float:
    """CPT-value of the empirical law via order statistics."""
    return _cpt_levels(F.samples, _edf_levels(F.n), u_plus, u_minus, w_plus, w_minus)


def _cpt_levels(x, cum, u_plus, u_minus, w_plus, w_minus) -> float:
    # cum[j] = P(X <= x[j-1]) with cum[0] = 0
    gains = np.dot(u_plus(x), -np.diff(w_plus(1.0 - cum)))
    losses = np.dot(u_minus(x), np.diff(w_minus(cum)))
    return float(gains - losses)


def cpt_truncated(F: Edf, spec: RiskSpec, tau: float) -> float:
    """CPT-value of the truncated EDF."""
    return cpt(truncate(F, tau, spec.one_sided), *spec.cpt_functions())


def rdeu(F: Edf, u: Any, w: Any) -> float:
    """RDEU via the CPT embedding u+ = u(x 1{x>=0}), u- = -u(x 1{x<0}),
    w- = w, w+(p) = 1 - w(1 - p)."""
    u, w = make_utility(u), make_weight(w)
    return cpt(F, gain_utility(u), loss_utility(u), w.dual(), w)


def estimate(F: Edf, spec: RiskSpec, tau: float | None = None) -> float:
    """Plug-in estimate; Type-2 measures are truncated at ``tau`` when given."""
    k = spec.kind
    if k == "cvar":
        return cvar(F, spec.alpha)
    if k == "srm":
        return srm(F, spec.spectrum)
    if k == "ubsr":
        return ubsr(F, spec.utility, spec.target)
    if tau is not None and math.isfinite(tau):
        F = truncate(F, tau, spec.one_sided)
    return cpt(F, *spec.cpt_functions())


def risk_of_atoms(values, probs, spec: RiskSpec) -> float:
    """Exact risk of a finite discrete law with the given atoms."""
    order = np.argsort(values)
    x = np.asarray(values, dtype=float)[order]
    p = np.asarray(probs, dtype=float)[order]
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("atom probabilities must be nonnegative and sum to 1")
    cum = np.concatenate([[0.0], np.minimum(np.cumsum(p), 1.0)])
    cum[-1] = 1.0
    k = spec.kind
    if k == "cvar":
        j = int(np.searchsorted(cum[1:], spec.alpha - 1e-12, side="left"))
        var = x[min(j, x.size - 1)]
        return float(var + np.dot(p, np.maximum(x - var, 0.0)) / (1.0 - spec.alpha))
    if k == "srm":
        return float(np.dot(x, np.diff(spec.spectrum(cum))))
    if k == "ubsr":
        l, t = spec.utility, spec.target
        lo, hi = x[0] - 1.0, x[-1] + 1.0
        g = lambda xi: float(np.dot(p, l(x - xi)))  # noqa: E731
        while g(lo) <= t:
            lo -= 2 * (hi - lo)
        while g(hi) > t:
            hi += 2 * (hi - lo)
        while hi - lo > 1e-13 * max(1.0, abs(hi)):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            lo, hi = (lo, mid) if g(mid) <= t else (mid, hi)
        return float(hi)
    return _cpt_levels(x, cum, *spec.cpt_functions())


# -- truncation schedule -----------------------------------------------------

class UnsupportedPair(ValueError):
    """The requested (risk, distribution) combination has no formula."""


def tau_schedule(spec: RiskSpec, dist: DistSpec, n: int) -> float:
    """Truncation level for Type-2 estimation from ``n`` samples.

    Bounded support gives the constant max(B1/K1, B2/K2); otherwise the level
    grows like sqrt(log n) (sub-Gaussian) or log n (sub-exponential).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    c2 = spec.type2_constants
    bounds = dist.support_bounds
    if bounds is not None:
        B1, B2 = bounds
        return max(B1 / c2.K1, B2 / c2.K2)
    ratio = max(1.0 / c2.K1, 1.0 / c2.K2)
    if dist.tail_class == SUB_GAUSSIAN:
        return ratio * (dist.tail_params["sigma"] * math.sqrt(math.log(n)) + 1.0)
    if dist.tail_class == SUB_EXPONENTIAL:
        return ratio * (math.log(n) / dist.tail_params["c"] + 1.0)
    raise UnsupportedPair(f"no truncation schedule for the {HEAVY_TAIL} class")


# -- step-CDF integrals used by the continuity inequalities ------------------

def upper_tail_integral(F: Edf, start: float, power: float) -> float:
    """int_start^inf (1 - F(z))^power dz for a step CDF."""
    x = F.samples
    if start >= x[-1]:
        return 0.0
    knots = np.concatenate([[start], x[x > start]])
    level = 1.0 - F(knots[:-1])
    return float(np.dot(level ** power, np.diff(knots)))


def lower_tail_integral(F: Edf, end: float, power: float) -> float:
    """int_-inf^end F(z)^power dz for a step CDF."""
    x = F.samples
    if end <= x[0]:
        return 0.0
    knots = np.concatenate([x[x < end], [end]])
    level = F(knots[:-1])
    return float(np.dot(level ** power, np.diff(knots)))


def type2_rhs(F: Edf, G: Edf, tau: float, spec: RiskSpec, w1: float) -> float:
    """Right side of the truncated Hoelder inequality for |rho(F) - rho(G|tau)|."""
    c = spec.type2_constants
    return (c.L1 * w1 ** c.a1 * tau ** c.gamma
            + c.L2 * upper_tail_integral(F, c.K1 * tau, c.a2)
            + c.L3 * lower_tail_integral(F, -c.K2 * tau, c.a3))


def truncation_mass_term(G: Edf, tau: float, spec: RiskSpec) -> float:
    """Extra term L tau (K+ P_G(Y >= tau)^a + K- P_G(Y < -tau)^a).

    It accounts for the mass that truncation moves to zero and is needed for
    the inequality to hold when G has support outside [-tau, tau).
    """
    _, Kp, _, Km = spec.derivative_bounds
    L, a = spec.holder
    x = G.samples
    upper = np.count_nonzero(x >= tau) / G.n
    lower = np.count_nonzero(x < -tau) / G.n
    return L * tau * (Kp * upper ** a + Km * lower ** a)
