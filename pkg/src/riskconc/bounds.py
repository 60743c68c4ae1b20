"""Tail-probability bounds and confidence radii for plug-in risk estimates.

The numerical constants (c1, c2, c3) of the underlying Wasserstein
concentration results are not known in closed form, so they are configuration
(:class:`BoundParams`).  The symbol ``gamma`` is the Type-2 exponent
1 - alpha_H; ``gamma_exp`` is the exponential-moment constant of a
sub-Gaussian-type law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any, Mapping

from .distributions import HEAVY_TAIL, SUB_EXPONENTIAL, SUB_GAUSSIAN, DistSpec
from .risk import RiskSpec, UnsupportedPair, tau_schedule


class BoundNotApplicable(ValueError):
    """The bound's precondition fails for the requested (eps, n)."""


@dataclass(frozen=True)
class BoundParams:
    c1: float = 2.0
    c2: float = 0.5
    c3: float = 0.5
    C: float = 4.0
    c: float = 0.25
    eta: float | None = None  # heavy-tail slack, defaults to beta / 2
    multiplier: float = 2.0  # factor in front of the bandit confidence radius

    def __post_init__(self):
        for f in ("c1", "c2", "c3", "C", "c", "multiplier"):
            if not getattr(self, f) > 0:
                raise ValueError(f"bound parameter {f} must be positive, got {getattr(self, f)}")
        if self.eta is not None and not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")

    def eta_for(self, beta: float) -> float:
        eta = beta / 2.0 if self.eta is None else self.eta
        if not 0 < eta < beta:
            raise ValueError(f"eta must lie in (0, beta={beta}), got {eta}")
        return eta

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any] | None) -> "BoundParams":
        cfg = dict(cfg or {})
        known = {f.name for f in fields(cls)}
        extra = sorted(set(cfg) - known)
        if extra:
            raise ValueError(f"unknown bound parameters {extra}")
        return cls(**{k: (None if v is None else float(v)) for k, v in cfg.items()})


DEFAULT_PARAMS = BoundParams()


def _clip(v: float, clamp: bool) -> float:
    return min(max(v, 0.0), 1.0) if clamp else v


def _check_t1(eps, n, L, kappa):
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    if not 0 < kappa <= 1:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")


def tail_t1_c1(eps: float, n: int, L: float, kappa: float, beta: float,
               p: BoundParams = DEFAULT_PARAMS, clamp: bool = True) -> float:
    """P(|rho_n - rho| > eps) for a Type-1 measure and an exponential-moment law.

    Gaussian-rate branch for eps <= L, beta-power branch above it.
    """
    _check_t1(eps, n, L, kappa)
    if not beta > 1:
        raise ValueError(f"beta must exceed 1, got {beta}")
    r = eps / L
    if eps <= L:
        v = p.c1 * math.exp(-p.c2 * n * r ** (2.0 / kappa))
    else:
        v = p.c1 * math.exp(-p.c3 * n * r ** (beta / kappa))
    return _clip(v, clamp)


def t1_subexp_threshold(n: int, L: float, kappa: float, p: BoundParams = DEFAULT_PARAMS) -> float:
    """Smallest eps (exclusive) for which the sub-exponential bound applies."""
    return L * (p.c2 / math.sqrt(n)) ** kappa


def tail_t1_subexp(eps: float, n: int, L: float, kappa: float,
                   p: BoundParams = DEFAULT_PARAMS, clamp: bool = True) -> float:
    """exp(-c1 n ((eps/L)^(1/kappa) - c2/sqrt(n))^2), valid only past the threshold."""
    _check_t1(eps, n, L, kappa)
    gap = (eps / L) ** (1.0 / kappa) - p.c2 / math.sqrt(n)
    if not gap > 0:
        raise BoundNotApplicable(
            f"eps={eps} is at or below the threshold {t1_subexp_threshold(n, L, kappa, p)} for n={n}")
    return _clip(math.exp(-p.c1 * n * gap * gap), clamp)


def tail_t1_heavy(eps: float, n: int, L: float, kappa: float, beta: float,
                  eta: float | None = None, p: BoundParams = DEFAULT_PARAMS,
                  clamp: bool = True) -> float:
    """Polynomial-moment law: Gaussian branch for eps <= L, n (n r)^-(beta-eta) above."""
    _check_t1(eps, n, L, kappa)
    if not beta > 2:
        raise ValueError(f"beta must exceed 2, got {beta}")
    eta = p.eta_for(beta) if eta is None else eta
    if not 0 < eta < beta:
        raise ValueError(f"eta must lie in (0, beta={beta}), got {eta}")
    r = eps / L
    if eps <= L:
        v = p.c1 * math.exp(-p.c2 * n * r ** (2.0 / kappa))
    else:
        v = p.c1 * n * (n * r ** (1.0 / kappa)) ** (-(beta - eta))
    return _clip(v, clamp)


def _type2(spec: RiskSpec):
    if spec.is_type1:
        raise ValueError(f"{spec.kind} is not a Type-2 measure")
    return spec.type2_constants


def bounded_tau(spec: RiskSpec, B1: float, B2: float) -> float:
    c = _type2(spec)
    return max(B1 / c.K1, B2 / c.K2)


def tail_t2_bounded(eps: float, n: int, spec: RiskSpec, B1: float, B2: float,
                    p: BoundParams = DEFAULT_PARAMS, clamp: bool = True) -> float:
    """Type-2 bound for a law supported in [-B2, B1]."""
    c = _type2(spec)
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    tau = bounded_tau(spec, B1, B2)
    scale = c.L1 * tau ** c.gamma
    return _clip(p.c1 * math.exp(-p.c2 * n * (eps / scale) ** (2.0 / c.a1)), clamp)


def t2_c1_correction(tau: float, spec: RiskSpec, beta: float, gamma_exp: float) -> float:
    """Bias term that truncation at ``tau`` adds for an exponential-moment law."""
    c = _type2(spec)
    if not beta > 1:
        raise ValueError(f"beta must exceed 1, got {beta}")
    out = 0.0
    for Lk, ak, Kk in ((c.L2, c.a2, c.K1), (c.L3, c.a3, c.K2)):
        s = Kk * tau
        out += Lk * math.exp(-ak * gamma_exp * s ** beta) / (s ** (beta - 1.0) * ak * gamma_exp * (beta - 1.0))
    return out


def tail_t2_c1(eps: float, tau: float, n: int, spec: RiskSpec, beta: float, gamma_exp: float,
               p: BoundParams = DEFAULT_PARAMS, clamp: bool = True) -> float:
    """Truncated Type-2 estimate at level ``tau`` under an exponential-moment law."""
    c = _type2(spec)
    eps_eff = eps - t2_c1_correction(tau, spec, beta, gamma_exp)
    if not eps_eff > 0:
        raise BoundNotApplicable(f"eps={eps} does not exceed the truncation bias at tau={tau}")
    scale = c.L1 * tau ** c.gamma
    return _clip(p.c1 * math.exp(-p.c2 * n * (eps_eff / scale) ** (2.0 / c.a1)), clamp)


def t2_subexp_correction(tau: float, spec: RiskSpec, c_se: float) -> float:
    c = _type2(spec)
    return (c.L2 / (c_se * c.a2) * math.exp(-c.a2 * c_se * c.K1 * tau)
            + c.L3 / (c_se * c.a3) * math.exp(-c.a3 * c_se * c.K2 * tau))


def tail_t2_subexp(eps: float, tau: float, n: int, spec: RiskSpec, c_se: float,
                   p: BoundParams = DEFAULT_PARAMS, clamp: bool = True) -> float:
    """Truncated Type-2 estimate under a sub-exponential law with constant ``c_se``."""
    c = _type2(spec)
    eps_eff = eps - t2_subexp_correction(tau, spec, c_se)
    if not eps_eff > 0:
        raise BoundNotApplicable(f"eps={eps} does not exceed the truncation bias at tau={tau}")
    gap = (eps_eff / (c.L1 * tau ** c.gamma)) ** (1.0 / c.a1) - p.c2 / math.sqrt(n)
    if not gap > 0:
        raise BoundNotApplicable(f"eps={eps} is at or below the sub-exponential threshold for n={n}")
    return _clip(math.exp(-p.c1 * n * gap * gap), clamp)


def tail_bound(eps: float, n: int, spec: RiskSpec, dist: DistSpec,
               p: BoundParams = DEFAULT_PARAMS, tau: float | None = None) -> float:
    """The bound that applies to (spec, dist); raises BoundNotApplicable or UnsupportedPair."""
    tp = dist.tail_params
    if spec.is_type1:
        L, kappa = spec.type1_constants
        if dist.tail_class == SUB_GAUSSIAN:
            return tail_t1_c1(eps, n, L, kappa, tp.get("beta", 2.0), p)
        if dist.tail_class == SUB_EXPONENTIAL:
            return tail_t1_subexp(eps, n, L, kappa, p)
        return tail_t1_heavy(eps, n, L, kappa, tp["beta"], p=p)
    if dist.support_bounds is not None:
        return tail_t2_bounded(eps, n, spec, *dist.support_bounds, p)
    if dist.tail_class == HEAVY_TAIL:
        raise UnsupportedPair("no Type-2 bound for polynomial-moment laws")
    tau = tau_schedule(spec, dist, n) if tau is None else tau
    if dist.tail_class == SUB_GAUSSIAN:
        return tail_t2_c1(eps, tau, n, spec, tp.get("beta", 2.0), tp["gamma_exp"], p)
    return tail_t2_subexp(eps, tau, n, spec, tp["c"], p)


def radius(delta: float, n: int, spec: RiskSpec, dist: DistSpec,
           p: BoundParams = DEFAULT_PARAMS) -> float:
    """Confidence radius eps with P(|rho_n - rho| > eps) <= delta.

    Supported: Type-1 with sub-Gaussian data (two-sided tail 2 c1 exp(...)),
    Type-2 with bounded support.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if spec.is_type1:
        if dist.tail_class != SUB_GAUSSIAN:
            raise UnsupportedPair("Type-1 radius needs sub-Gaussian data")
        L, kappa = spec.type1_constants
        return L * (max(math.log(2.0 * p.c1 / delta), 0.0) / (p.c2 * n)) ** (kappa / 2.0)
    if dist.support_bounds is None:
        raise UnsupportedPair("Type-2 radius needs bounded support")
    c = spec.type2_constants
    tau = bounded_tau(spec, *dist.support_bounds)
    return c.L1 * tau ** c.gamma * (max(math.log(p.c1 / delta), 0.0) / (p.c2 * n)) ** (c.a1 / 2.0)
