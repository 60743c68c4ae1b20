"""Config-driven Monte Carlo experiments producing CSV-ready rows.

Every random draw is keyed by a :class:`numpy.random.SeedSequence` built from
the config seed and the row key (n, trial, pair or bandit seed), so results do
not depend on thread count or scheduling.
"""
from __future__ import annotations

import contextlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from . import bandit as B
from .bounds import BoundNotApplicable, BoundParams, tail_bound
from .distributions import DistSpec, Edf, sample, true_risk
from .risk import (
    RiskSpec,
    UnsupportedPair,
    cpt,
    cpt_truncated,
    estimate,
    tau_schedule,
    truncation_mass_term,
    type2_rhs,
)
from .wasserstein import w1_edf

KINDS = ("estimate", "concentration", "continuity", "bandit")
SLACK = 1e-10


class ConfigError(ValueError):
    """Invalid experiment configuration; the message starts with the field path."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@contextlib.contextmanager
def _at(path: str):
    try:
        yield
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        msg = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise ConfigError(path, msg) from None


@dataclass(frozen=True)
class ContinuitySettings:
    pairs: int = 1000
    taus: tuple[float, ...] = (0.5, 1.0, 2.0, 5.0)
    max_size: int = 50
    low: float = -5.0
    high: float = 5.0
    tie_fraction: float = 0.3
    nearby_fraction: float = 0.5
    corrected: bool = False


@dataclass(frozen=True)
class BanditSettings:
    arms: tuple[DistSpec, ...] = ()
    seeds: int = 100
    policy: str = "risk-lcb"
    n0: int = 1
    traces: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    risk: RiskSpec
    dist: DistSpec | None = None
    sizes: tuple[int, ...] = ()
    trials: int = 1
    eps: tuple[float, ...] = ()
    bounds: BoundParams = field(default_factory=BoundParams)
    require_applicable: bool = False
    seed: int = 0
    tau: str | float = "schedule"
    output: str | None = None
    continuity: ContinuitySettings = field(default_factory=ContinuitySettings)
    bandit: BanditSettings = field(default_factory=BanditSettings)


def _positive_ints(values, path: str) -> tuple[int, ...]:
    with _at(path):
        if isinstance(values, (int, float)):
            values = [values]
        out = tuple(int(v) for v in values)
        if not out:
            raise ValueError("must be a nonempty list")
        if any(v < 1 or v != float(w) for v, w in zip(out, values)):
            raise ValueError(f"entries must be positive integers, got {list(values)}")
    return out


def parse_config(raw: Mapping[str, Any], kind: str | None = None) -> ExperimentConfig:
    """Validate a parsed config mapping; errors carry the offending field path."""
    if not isinstance(raw, Mapping):
        raise ConfigError("<root>", "config must be a mapping")
    raw = dict(raw)
    file_kind = raw.pop("kind", None)
    if kind is not None and file_kind is not None and file_kind != kind:
        raise ConfigError("kind", f"config is for {file_kind!r}, not {kind!r}")
    kind = kind or file_kind
    if kind not in KINDS:
        raise ConfigError("kind", f"must be one of {KINDS}, got {kind!r}")
    if "risk" not in raw:
        raise ConfigError("risk", "required")
    with _at("risk"):
        risk = RiskSpec.from_config(raw.pop("risk"))
    out: dict[str, Any] = {"kind": kind, "risk": risk}
    if "dist" in raw:
        with _at("dist"):
            out["dist"] = DistSpec.from_config(raw.pop("dist"))
    elif kind in ("estimate", "concentration"):
        raise ConfigError("dist", "required")
    if "sizes" in raw:
        out["sizes"] = _positive_ints(raw.pop("sizes"), "sizes")
    elif kind != "continuity":
        raise ConfigError("sizes", "required")
    if "trials" in raw:
        out["trials"] = _positive_ints(raw.pop("trials"), "trials")[0]
    if "eps" in raw:
        with _at("eps"):
            eps = raw.pop("eps")
            eps = tuple(float(e) for e in (eps if isinstance(eps, (list, tuple)) else [eps]))
            if not eps or any(not e > 0 for e in eps):
                raise ValueError("must be a nonempty list of positive numbers")
        out["eps"] = eps
    elif kind == "concentration":
        raise ConfigError("eps", "required")
    bounds = dict(raw.pop("bounds", {}) or {})
    out["require_applicable"] = bool(bounds.pop("require_applicable", False))
    with _at("bounds"):
        out["bounds"] = BoundParams.from_config(bounds)
    if "seed" in raw:
        with _at("seed"):
            seed = int(raw.pop("seed"))
            if seed < 0:
                raise ValueError("must be nonnegative")
        out["seed"] = seed
    if "tau" in raw:
        tau = raw.pop("tau")
        with _at("tau"):
            if tau is None or tau == "none":
                tau = "none"
            elif tau != "schedule":
                tau = float(tau)
                if not tau > 0:
                    raise ValueError("must be 'schedule', 'none' or a positive number")
        out["tau"] = tau
    if "output" in raw:
        out["output"] = str(raw.pop("output"))
    if "continuity" in raw:
        c = dict(raw.pop("continuity") or {})
        with _at("continuity"):
            if "taus" in c:
                c["taus"] = tuple(float(t) for t in c["taus"])
            settings = ContinuitySettings(**c)
            if settings.pairs < 1 or settings.max_size < 1 or not settings.low < settings.high:
                raise ValueError("needs pairs >= 1, max_size >= 1 and low < high")
            if any(not t > 0 for t in settings.taus):
                raise ValueError("taus must be positive")
        out["continuity"] = settings
    if "bandit" in raw:
        b = dict(raw.pop("bandit") or {})
        arms = b.pop("arms", [])
        parsed = []
        for i, a in enumerate(arms):
            with _at(f"bandit.arms[{i}]"):
                parsed.append(DistSpec.from_config(a))
        with _at("bandit"):
            out["bandit"] = BanditSettings(arms=tuple(parsed), **b)
            if out["bandit"].seeds < 1:
                raise ValueError("seeds must be >= 1")
    if kind == "bandit":
        settings = out.get("bandit", BanditSettings())
        if len(settings.arms) < 2:
            raise ConfigError("bandit.arms", "needs at least two arms")
        with _at("bandit"):
            B.BanditConfig(settings.arms, risk, min(out["sizes"]), out["bounds"], 0,
                           settings.policy, settings.n0)
    if raw:
        raise ConfigError(sorted(raw)[0], "unknown key")
    return ExperimentConfig(**out)


# -- helpers -----------------------------------------------------------------

def _pmap(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def trial_seed(*key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(k) for k in key])


def estimation_tau(cfg: ExperimentConfig, n: int) -> float | None:
    """Truncation level for Type-2 estimation; bounded laws are never truncated."""
    if cfg.risk.is_type1 or cfg.tau == "none":
        return None
    if isinstance(cfg.tau, float):
        return cfg.tau
    if cfg.dist.support_bounds is not None:
        return None
    return tau_schedule(cfg.risk, cfg.dist, n)


def _truth(cfg: ExperimentConfig) -> float:
    tr = true_risk(cfg.dist, cfg.risk)
    if tr is None:
        raise ConfigError("risk", f"no exact risk for {cfg.risk.kind} under {cfg.dist.family}")
    return tr.value


def _errors(cfg: ExperimentConfig, truth: float, threads: int) -> tuple[dict[int, np.ndarray], float]:
    keys = [(n, k) for n in cfg.sizes for k in range(cfg.trials)]

    def one(key):
        n, k = key
        F = sample(cfg.dist, n, trial_seed(cfg.seed, n, k))
        return estimate(F, cfg.risk, estimation_tau(cfg, n))

    est = np.array(_pmap(one, keys, threads))
    est = est.reshape(len(cfg.sizes), cfg.trials)
    return {n: est[j] for j, n in enumerate(cfg.sizes)}, truth


# -- runners -----------------------------------------------------------------

ESTIMATE_HEADER = ("n", "trial", "estimate", "abs_error")
SUMMARY_HEADER = ("n", "mean_abs_error", "p95_abs_error")
CONCENTRATION_HEADER = ("n", "eps", "empirical_tail", "bound_value", "applicable")
CONTINUITY_HEADER = ("pair_id", "w1", "lhs", "rhs", "holds")
BANDIT_HEADER = ("n", "mean_regret", "p95_regret", "gap_dep_bound", "gap_free_bound")


def run_estimate(cfg: ExperimentConfig, threads: int = 1) -> tuple[list[tuple], list[tuple]]:
    """(trial rows, summary rows)."""
    est, truth = _errors(cfg, _truth(cfg), threads)
    rows, summary = [], []
    for n in cfg.sizes:
        err = np.abs(est[n] - truth)
        rows.extend((n, k, float(e), float(a)) for k, (e, a) in enumerate(zip(est[n], err)))
        summary.append((n, float(err.mean()), float(np.percentile(err, 95))))
    return rows, summary


@dataclass
class ConcentrationResult:
    rows: list[tuple]
    any_inapplicable: bool


def run_concentration(cfg: ExperimentConfig, threads: int = 1) -> ConcentrationResult:
    est, truth = _errors(cfg, _truth(cfg), threads)
    rows, missing = [], False
    for n in cfg.sizes:
        err = np.abs(est[n] - truth)
        for eps in cfg.eps:
            tail = float(np.mean(err > eps))
            try:
                bound, ok = tail_bound(eps, n, cfg.risk, cfg.dist, cfg.bounds, estimation_tau(cfg, n)), True
            except (BoundNotApplicable, UnsupportedPair):
                bound, ok, missing = math.nan, False, True
            rows.append((n, eps, tail, bound, ok))
    return ConcentrationResult(rows, missing)


def random_pair(rng: np.random.Generator, s: ContinuitySettings) -> tuple[Edf, Edf]:
    """Two EDFs on [low, high].

    Independent pairs have unrelated sizes and values.  Nearby pairs (a
    ``nearby_fraction`` of draws) perturb a few points of F and may add or
    drop points, which probes the small-distance regime.  Some samples are
    rounded to one decimal so that ties occur.
    """
    def draw(m):
        x = rng.uniform(s.low, s.high, m)
        return np.round(x, 1) if rng.random() < s.tie_fraction else x

    x = draw(int(rng.integers(1, s.max_size + 1)))
    if rng.random() >= s.nearby_fraction:
        return Edf(x), Edf(draw(int(rng.integers(1, s.max_size + 1))))
    y = x.copy()
    moved = rng.random(y.size) < 0.3
    y[moved] += rng.normal(0.0, 0.05 * (s.high - s.low), moved.sum())
    if rng.random() < 0.5:
        y = np.concatenate([y, rng.uniform(s.low, s.high, int(rng.integers(1, 4)))])
    elif y.size > 1 and rng.random() < 0.5:
        y = np.delete(y, int(rng.integers(y.size)))
    return Edf(x), Edf(np.clip(y, s.low, s.high))


def continuity_rows(spec: RiskSpec, F: Edf, G: Edf, settings: ContinuitySettings) -> list[tuple]:
    """(w1, lhs, rhs) triples for one pair; one per tau for Type-2 measures."""
    w1 = w1_edf(F, G)
    if spec.is_type1:
        L, kappa = spec.type1_constants
        if settings.corrected and spec.kind == "ubsr":
            L = spec.utility.slope_max / spec.utility.slope_min
        lhs = abs(estimate(F, spec) - estimate(G, spec))
        return [(w1, lhs, L * w1 ** kappa)]
    out = []
    funcs = spec.cpt_functions()
    rho_F = cpt(F, *funcs)
    for tau in settings.taus:
        lhs = abs(rho_F - cpt_truncated(G, spec, tau))
        rhs = type2_rhs(F, G, tau, spec, w1)
        if settings.corrected:
            rhs += truncation_mass_term(G, tau, spec)
        out.append((w1, lhs, rhs))
    return out


def run_continuity(cfg: ExperimentConfig, threads: int = 1) -> list[tuple]:
    s = cfg.continuity

    def one(pid):
        if pid == 0:
            rng = np.random.default_rng(trial_seed(cfg.seed, 0))
            F, _ = random_pair(rng, s)
            G = F
        else:
            F, G = random_pair(np.random.default_rng(trial_seed(cfg.seed, pid)), s)
        return continuity_rows(cfg.risk, F, G, s)

    rows = []
    for triples in _pmap(one, range(s.pairs), threads):
        for w1, lhs, rhs in triples:
            rows.append((len(rows), w1, lhs, rhs, bool(lhs <= rhs + SLACK)))
    return rows


@dataclass
class BanditResult:
    aggregate: list[tuple]
    traces: dict[tuple[int, int], B.RegretTrace]


def bandit_run_seed(seed: int, n: int, s: int) -> int:
    return int(trial_seed(seed, n, s).generate_state(1, np.uint64)[0])


def run_bandit(cfg: ExperimentConfig, threads: int = 1, keep_traces: bool | None = None) -> BanditResult:
    st = cfg.bandit
    keep = st.traces if keep_traces is None else keep_traces
    base = B.BanditConfig(st.arms, cfg.risk, max(cfg.sizes), cfg.bounds, 0, st.policy, st.n0)
    delta = B.gaps(base)
    keys = [(n, s) for n in cfg.sizes for s in range(st.seeds)]

    def one(key):
        n, s = key
        return B.run(replace(base, horizon=n, seed=bandit_run_seed(cfg.seed, n, s)), delta)

    traces = dict(zip(keys, _pmap(one, keys, threads)))
    agg = []
    for n in cfg.sizes:
        final = np.array([traces[(n, s)].final_regret for s in range(st.seeds)])
        dep, free = B.regret_bounds(replace(base, horizon=n), n, delta)
        agg.append((n, float(final.mean()), float(np.percentile(final, 95)), dep, free))
    return BanditResult(agg, traces if keep else {})


def trace_header(K: int) -> tuple[str, ...]:
    return (("t", "arm", "sample") + tuple(f"T_{i}" for i in range(1, K + 1))
            + tuple(f"est_{i}" for i in range(1, K + 1))
            + tuple(f"lcb_{i}" for i in range(1, K + 1)) + ("regret",))


def trace_rows(tr: B.RegretTrace) -> Iterable[tuple]:
    for t in range(tr.n):
        yield ((t + 1, int(tr.arm[t]) + 1, float(tr.sample[t]))
               + tuple(int(c) for c in tr.counts[t]) + tuple(float(e) for e in tr.estimates[t])
               + tuple(float(v) for v in tr.lcb[t]) + (float(tr.regret[t]),))


# -- self test ---------------------------------------------------------------

def selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Quick cross-checks of the closed forms against the brute-force oracles."""
    from .oracles import cvar_grid, rdeu_direct, w1_grid
    from .functions import linear_utility, piecewise_linear_utility, power_weight, tversky_weight
    from .risk import cvar, rdeu
    from .wasserstein import w1_quantile

    rng = np.random.default_rng(trial_seed(seed, 7))
    results = []

    worst = 0.0
    for _ in range(200):
        F = Edf(rng.normal(size=rng.integers(1, 60)))
        G = Edf(rng.normal(size=rng.integers(1, 60)))
        worst = max(worst, abs(w1_edf(F, G) - w1_quantile(F, G)))
    results.append(("w1 forms agree", worst <= 1e-10, f"max diff {worst:.3g}"))

    worst = 0.0
    for _ in range(10):
        F = Edf(rng.uniform(-5, 5, rng.integers(1, 30)))
        G = Edf(rng.uniform(-5, 5, rng.integers(1, 30)))
        worst = max(worst, abs(w1_edf(F, G) - w1_grid(F, G, -5, 5)))
    results.append(("w1 vs grid oracle", worst <= 1e-3, f"max diff {worst:.3g}"))

    worst = 0.0
    for _ in range(20):
        F = Edf(rng.uniform(-5, 5, rng.integers(1, 40)))
        for a in (0.1, 0.5, 0.9, 0.99):
            worst = max(worst, abs(cvar(F, a) - cvar_grid(F, a, -5, 5)))
    results.append(("cvar vs grid oracle", worst <= 1e-3, f"max diff {worst:.3g}"))

    worst = 0.0
    for _ in range(200):
        F = Edf(rng.normal(size=rng.integers(1, 30)))
        u = linear_utility(rng.uniform(0.5, 2)) if rng.random() < 0.5 else \
            piecewise_linear_utility(rng.uniform(0.5, 2), rng.uniform(0.5, 2))
        w = power_weight(rng.uniform(0.3, 3)) if rng.random() < 0.5 else tversky_weight(rng.uniform(0.3, 1))
        worst = max(worst, abs(rdeu(F, u, w) - rdeu_direct(F, u, w)))
    results.append(("rdeu mapping vs direct sum", worst <= 1e-12, f"max diff {worst:.3g}"))
    return results
