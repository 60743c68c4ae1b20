"""Risk-averse multi-armed bandit: environment, Risk-LCB policy, regret accounting.

The learner minimises risk, so the best arm has the smallest true risk and the
policy plays the arm with the lowest lower confidence bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import DEFAULT_PARAMS, BoundParams, bounded_tau
from .distributions import SUB_GAUSSIAN, DistSpec, Edf, true_risk
from .risk import RiskSpec, estimate, tau_schedule

POLICIES = ("risk-lcb", "uniform")
_CHUNK = 4096


@dataclass(frozen=True)
class BanditConfig:
    arms: tuple[DistSpec, ...]
    risk: RiskSpec
    horizon: int
    params: BoundParams = DEFAULT_PARAMS
    seed: int = 0
    policy: str = "risk-lcb"
    n0: int = 1  # initial pulls per arm

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        K = len(self.arms)
        if K < 2:
            raise ValueError("a bandit needs at least two arms")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; known: {POLICIES}")
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if self.horizon < K * self.n0:
            raise ValueError(f"horizon {self.horizon} is shorter than the {K * self.n0} initial pulls")
        for i, arm in enumerate(self.arms):
            if self.risk.is_type1:
                if arm.tail_class != SUB_GAUSSIAN:
                    raise ValueError(f"arm {i}: Type-1 bandits need sub-Gaussian arms, got {arm.tail_class}")
            elif arm.support_bounds is None and not (self.n0 > 1 and arm.tail_class == SUB_GAUSSIAN):
                raise ValueError(f"arm {i}: Type-2 bandits need bounded arms "
                                 "(or sub-Gaussian arms with an n0 > 1 warm start)")

    @property
    def K(self) -> int:
        return len(self.arms)


@dataclass
class RegretTrace:
    """Per-round record; row t-1 describes round t.

    ``lcb`` holds the indices the policy compared in that round (NaN during
    initialisation); ``counts`` and ``estimates`` are taken after the pull.
    """

    arm: np.ndarray
    sample: np.ndarray
    counts: np.ndarray
    estimates: np.ndarray
    lcb: np.ndarray
    regret: np.ndarray
    gaps: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.arm.size

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])


def gaps(cfg: BanditConfig) -> np.ndarray:
    """Delta_i = rho(i) - min_j rho(j) from the arms' exact risks."""
    risks = []
    for i, arm in enumerate(cfg.arms):
        tr = true_risk(arm, cfg.risk)
        if tr is None:
            raise ValueError(f"true risk unavailable for arm {i} ({arm.family})")
        risks.append(tr.value)
    risks = np.array(risks)
    return risks - risks.min()


def _arm_scale(spec: RiskSpec, arm: DistSpec, count: int) -> tuple[float, float]:
    """(multiplicative scale, exponent) of the confidence radius for one arm."""
    if spec.is_type1:
        L, kappa = spec.type1_constants
        return L, kappa
    c = spec.type2_constants
    if arm.support_bounds is not None:
        tau = bounded_tau(spec, *arm.support_bounds)
    else:
        tau = tau_schedule(spec, arm, count)
    return c.L1 * tau ** c.gamma, c.a1


def lcb_index(est: float, count: int, t: int, spec: RiskSpec, p: BoundParams = DEFAULT_PARAMS,
              arm: DistSpec | None = None) -> float:
    """est - m * scale * (log(C t) / (c T))^(exponent / 2).

    ``scale``/``exponent`` are (L, kappa) for Type-1 measures and
    (L1 tau^gamma, alpha_1) for Type-2 measures, where ``arm`` supplies tau.
    A nonpositive log(C t) gives -inf so the arm is explored.
    """
    if count < 1 or t < 1:
        raise ValueError("need count >= 1 and t >= 1")
    if not spec.is_type1 and arm is None:
        raise ValueError("Type-2 indices need the arm's distribution for tau")
    scale, expo = _arm_scale(spec, arm, count)
    lg = math.log(p.C * t)
    if lg <= 0:
        return -math.inf
    return est - p.multiplier * scale * (lg / (p.c * count)) ** (expo / 2.0)


class _ArmStream:
    """Reproducible per-arm sample stream, drawn in fixed-size blocks."""

    def __init__(self, arm: DistSpec, rng: np.random.Generator):
        self._arm, self._rng = arm, rng
        self._buf = np.empty(0)
        self._pos = 0

    def next(self) -> float:
        if self._pos == self._buf.size:
            self._buf = self._arm.draw(self._rng, _CHUNK)
            self._pos = 0
        v = self._buf[self._pos]
        self._pos += 1
        return float(v)


def run(cfg: BanditConfig, delta: np.ndarray | None = None) -> RegretTrace:
    """Simulate one run; deterministic in ``cfg``.

    Pass precomputed ``delta`` (from :func:`gaps`) to skip the exact-risk step
    when running many seeds.
    """
    K, n, spec, p = cfg.K, cfg.horizon, cfg.risk, cfg.params
    delta = gaps(cfg) if delta is None else np.asarray(delta, dtype=float)
    children = np.random.SeedSequence(cfg.seed).spawn(K + 1)
    streams = [_ArmStream(a, np.random.default_rng(s)) for a, s in zip(cfg.arms, children[:K])]
    policy_rng = np.random.default_rng(children[K])

    arm_t = np.empty(n, dtype=np.int64)
    sample_t = np.empty(n)
    counts_t = np.empty((n, K), dtype=np.int64)
    est_t = np.empty((n, K))
    lcb_t = np.full((n, K), np.nan)
    regret_t = np.empty(n)

    data = [np.empty(0) for _ in range(K)]
    counts = np.zeros(K, dtype=np.int64)
    est = np.full(K, np.nan)
    regret = 0.0
    warm = K * cfg.n0
    for t in range(1, n + 1):
        if t <= warm:
            i = (t - 1) % K
        elif cfg.policy == "uniform":
            i = int(policy_rng.integers(K))
        else:
            idx = np.array([lcb_index(est[j], int(counts[j]), t, spec, p, cfg.arms[j]) for j in range(K)])
            lcb_t[t - 1] = idx
            i = int(np.argmin(idx))  # first minimiser, so ties go to the lowest index
        x = streams[i].next()
        data[i] = np.insert(data[i], np.searchsorted(data[i], x), x)
        counts[i] += 1
        F = Edf.from_sorted(data[i])
        tau = None
        if not spec.is_type1 and cfg.arms[i].support_bounds is None:
            tau = tau_schedule(spec, cfg.arms[i], int(counts[i]))
        est[i] = estimate(F, spec, tau)
        regret += delta[i]
        arm_t[t - 1], sample_t[t - 1] = i, x
        counts_t[t - 1], est_t[t - 1], regret_t[t - 1] = counts, est, regret
    return RegretTrace(arm_t, sample_t, counts_t, est_t, lcb_t, regret_t, delta)


def _bound_scale(cfg: BanditConfig, n: int) -> float:
    return max(_arm_scale(cfg.risk, arm, n)[0] for arm in cfg.arms)


def regret_bounds(cfg: BanditConfig, n: int, delta: Sequence[float] | None = None) -> tuple[float, float]:
    """(gap-dependent, gap-free) upper bounds on expected regret after n rounds.

    With scale S (1/(1-alpha) for CVaR) and radius multiplier m:
    sum over positive gaps of m^2 S^2 4 log(Cn)/Delta_i + K (1 + pi^2/3) Delta_i, and
    4 m S sqrt(K n log(Cn)) + (1 + pi^2/3) sum_i Delta_i.
    """
    delta = gaps(cfg) if delta is None else np.asarray(delta, dtype=float)
    p, K = cfg.params, cfg.K
    S, m = _bound_scale(cfg, n), p.multiplier
    lg = max(math.log(p.C * n), 0.0)
    extra = 1.0 + math.pi**2 / 3.0
    pos = delta[delta > 0]
    gap_dep = float(np.sum(4.0 * m * m * S * S * lg / pos + K * extra * pos))
    gap_free = 4.0 * m * S * math.sqrt(K * n * lg) + extra * float(delta.sum())
    return gap_dep, gap_free
