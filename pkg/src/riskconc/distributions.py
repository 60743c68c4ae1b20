"""Seeded samplers, empirical distribution functions and ground-truth risk values."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Mapping

import numpy as np
from scipy import integrate, optimize, special, stats

if TYPE_CHECKING:
    from .risk import RiskSpec

SUB_GAUSSIAN = "sub-gaussian"
SUB_EXPONENTIAL = "sub-exponential"
HEAVY_TAIL = "heavy-tail"
TAIL_CLASSES = (SUB_GAUSSIAN, SUB_EXPONENTIAL, HEAVY_TAIL)

# family -> (parameter names, tail class)
FAMILIES: dict[str, tuple[tuple[str, ...], str]] = {
    "bounded-uniform": (("a", "b"), SUB_GAUSSIAN),
    "bernoulli-scaled": (("p", "lo", "hi"), SUB_GAUSSIAN),
    "gaussian": (("mu", "sigma"), SUB_GAUSSIAN),
    "laplace": (("mu", "b"), SUB_EXPONENTIAL),
    "exponential": (("lam",), SUB_EXPONENTIAL),
    "pareto": (("x_m", "shape"), HEAVY_TAIL),
    "student-t": (("nu", "scale"), HEAVY_TAIL),
}


class Edf:
    """Empirical step CDF of a finite sample, stored as sorted samples.

    >>> F = Edf([3.0, 1.0, 2.0])
    >>> F.samples.tolist(), F(2.0)
    ([1.0, 2.0, 3.0], 0.6666666666666666)
    """

    __slots__ = ("_x",)

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        self._set(x)

    def _set(self, x: np.ndarray) -> None:
        if x.size == 0:
            raise ValueError("an Edf needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("Edf samples must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "_x", x)

    @classmethod
    def from_sorted(cls, x: np.ndarray) -> "Edf":
        """Wrap an array that is already ascending; no copy, no re-sort."""
        out = cls.__new__(cls)
        out._set(np.asarray(x, dtype=float))
        return out

    def __setattr__(self, name, value):
        raise AttributeError("Edf is immutable")

    @property
    def samples(self) -> np.ndarray:
        return self._x

    @property
    def n(self) -> int:
        return self._x.size

    def __len__(self) -> int:
        return self._x.size

    def __call__(self, x):
        """F(x) = #{i : x_i <= x} / n."""
        return np.searchsorted(self._x, x, side="right") / self.n

    def quantile(self, beta):
        """Generalised inverse inf{x : F(x) >= beta} for beta in (0, 1]."""
        beta = np.asarray(beta, dtype=float)
        idx = np.clip(np.ceil(beta * self.n).astype(int) - 1, 0, self.n - 1)
        return self._x[idx]

    def mean(self) -> float:
        return float(self._x.mean())

    def __eq__(self, other):
        return isinstance(other, Edf) and np.array_equal(self._x, other._x)

    def __hash__(self):
        return hash(self._x.tobytes())

    def __repr__(self):
        return f"Edf(n={self.n}, samples={np.array2string(self._x, threshold=8)})"


@dataclass(frozen=True)
class DistSpec:
    """A source distribution together with its declared tail class.

    ``tail_params`` holds the class parameters used by the bounds: ``sigma``
    (and ``gamma_exp``) for sub-Gaussian, ``c`` for sub-exponential,
    ``beta``/``u_bar`` for the polynomial-moment class.  Missing entries are
    filled from the family.
    """

    family: str
    params: Mapping[str, float]
    tail_class: str | None = None
    tail_params: Mapping[str, float] = field(default_factory=dict)
    center: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; known: {sorted(FAMILIES)}")
        names, natural = FAMILIES[self.family]
        params = {k: float(v) for k, v in dict(self.params).items()}
        missing = [k for k in names if k not in params]
        extra = [k for k in params if k not in names]
        if missing or extra:
            raise ValueError(f"{self.family} expects parameters {names}, got {sorted(params)}")
        object.__setattr__(self, "params", params)
        _validate_params(self.family, params)
        tail_class = self.tail_class or natural
        if tail_class not in TAIL_CLASSES:
            raise ValueError(f"unknown tail class {tail_class!r}")
        if tail_class != natural and not (natural == SUB_GAUSSIAN and tail_class == SUB_EXPONENTIAL):
            # a sub-Gaussian law is also sub-exponential; nothing else is interchangeable
            raise ValueError(f"family {self.family} is {natural}, cannot declare {tail_class}")
        object.__setattr__(self, "tail_class", tail_class)
        tp = _default_tail_params(self.family, params, tail_class, self.center)
        tp.update({k: float(v) for k, v in dict(self.tail_params).items()})
        if tail_class == HEAVY_TAIL:
            beta = tp["beta"]
            if beta <= 2:
                raise ValueError(f"heavy-tail class needs beta > 2, got {beta}")
            limit = params["shape"] if self.family == "pareto" else params["nu"]
            if beta >= limit:
                raise ValueError(f"beta={beta} must be below the tail index {limit} of {self.family}")
        object.__setattr__(self, "tail_params", tp)

    # -- constructors --------------------------------------------------------
    @classmethod
    def gaussian(cls, mu: float = 0.0, sigma: float = 1.0, **kw) -> "DistSpec":
        return cls("gaussian", {"mu": mu, "sigma": sigma}, **kw)

    @classmethod
    def bounded_uniform(cls, a: float, b: float, **kw) -> "DistSpec":
        return cls("bounded-uniform", {"a": a, "b": b}, **kw)

    @classmethod
    def bernoulli_scaled(cls, p: float, lo: float, hi: float, **kw) -> "DistSpec":
        return cls("bernoulli-scaled", {"p": p, "lo": lo, "hi": hi}, **kw)

    @classmethod
    def laplace(cls, mu: float = 0.0, b: float = 1.0, **kw) -> "DistSpec":
        return cls("laplace", {"mu": mu, "b": b}, **kw)

    @classmethod
    def exponential(cls, lam: float = 1.0, **kw) -> "DistSpec":
        return cls("exponential", {"lam": lam}, **kw)

    @classmethod
    def pareto(cls, x_m: float, shape: float, **kw) -> "DistSpec":
        return cls("pareto", {"x_m": x_m, "shape": shape}, **kw)

    @classmethod
    def student_t(cls, nu: float, scale: float = 1.0, **kw) -> "DistSpec":
        return cls("student-t", {"nu": nu, "scale": scale}, **kw)

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "DistSpec":
        cfg = dict(cfg)
        family = cfg.pop("family", None)
        if family is None:
            raise ValueError("distribution needs a 'family'")
        tail_class = cfg.pop("tail_class", None)
        tail_params = cfg.pop("tail_params", {}) or {}
        center = bool(cfg.pop("center", False))
        return cls(family, cfg, tail_class, tail_params, center)

    # -- properties ----------------------------------------------------------
    @property
    def support(self) -> tuple[float, float] | None:
        p = self.params
        if self.family == "bounded-uniform":
            return p["a"], p["b"]
        if self.family == "bernoulli-scaled":
            return min(p["lo"], p["hi"]), max(p["lo"], p["hi"])
        return None

    @property
    def support_bounds(self) -> tuple[float, float] | None:
        """(B1, B2) with the support inside [-B2, B1], both nonnegative."""
        s = self.support
        if s is None:
            return None
        return max(s[1], 0.0), max(-s[0], 0.0)

    @property
    def offset(self) -> float:
        """Shift applied to raw draws (nonzero only for centred Pareto)."""
        if self.center and self.family == "pareto":
            p = self.params
            return -p["shape"] * p["x_m"] / (p["shape"] - 1.0)
        return 0.0

    def atoms(self) -> tuple[np.ndarray, np.ndarray] | None:
        """(values, probabilities) for a discrete law, else None."""
        if self.family != "bernoulli-scaled":
            return None
        p, lo, hi = self.params["p"], self.params["lo"], self.params["hi"]
        pts = {}
        for v, w in ((lo, 1.0 - p), (hi, p)):
            if w > 0:
                pts[v] = pts.get(v, 0.0) + w
        vals = np.array(sorted(pts))
        return vals, np.array([pts[v] for v in vals])

    def scipy(self):
        """Frozen scipy distribution of the continuous family (after any shift)."""
        p = self.params
        f = self.family
        if f == "bounded-uniform":
            return stats.uniform(loc=p["a"], scale=p["b"] - p["a"])
        if f == "gaussian":
            return stats.norm(loc=p["mu"], scale=p["sigma"])
        if f == "laplace":
            return stats.laplace(loc=p["mu"], scale=p["b"])
        if f == "exponential":
            return stats.expon(scale=1.0 / p["lam"])
        if f == "pareto":
            return stats.pareto(b=p["shape"], scale=p["x_m"], loc=self.offset)
        if f == "student-t":
            return stats.t(df=p["nu"], scale=p["scale"])
        raise ValueError(f"{f} is discrete; use atoms()")

    def mean(self) -> float:
        atoms = self.atoms()
        if atoms is not None:
            return float(np.dot(*atoms))
        return float(self.scipy().mean())

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Unsorted i.i.d. draws from ``rng``."""
        p = self.params
        f = self.family
        if f == "bounded-uniform":
            return rng.uniform(p["a"], p["b"], size)
        if f == "bernoulli-scaled":
            return np.where(rng.random(size) < p["p"], p["hi"], p["lo"])
        if f == "gaussian":
            return rng.normal(p["mu"], p["sigma"], size)
        if f == "laplace":
            return rng.laplace(p["mu"], p["b"], size)
        if f == "exponential":
            return rng.exponential(1.0 / p["lam"], size)
        if f == "pareto":
            return p["x_m"] * (1.0 + rng.pareto(p["shape"], size)) + self.offset
        if f == "student-t":
            return p["scale"] * rng.standard_t(p["nu"], size)
        raise AssertionError(f)


def _validate_params(family: str, p: dict[str, float]) -> None:
    def need(cond, msg):
        if not cond:
            raise ValueError(f"{family}: {msg}")

    if family == "bounded-uniform":
        need(p["a"] < p["b"], "needs a < b")
    elif family == "bernoulli-scaled":
        need(0.0 <= p["p"] <= 1.0, "needs 0 <= p <= 1")
    elif family == "gaussian":
        need(p["sigma"] > 0, "needs sigma > 0")
    elif family == "laplace":
        need(p["b"] > 0, "needs b > 0")
    elif family == "exponential":
        need(p["lam"] > 0, "needs lam > 0")
    elif family == "pareto":
        need(p["x_m"] > 0, "needs x_m > 0")
        need(p["shape"] > 2, "needs shape > 2 for a finite moment of order beta > 2")
    elif family == "student-t":
        need(p["scale"] > 0, "needs scale > 0")
        need(p["nu"] > 2, "needs nu > 2 (no moment of order beta > 2 otherwise)")


def _default_tail_params(family: str, p: dict[str, float], tail_class: str,
                         center: bool) -> dict[str, float]:
    if tail_class == SUB_GAUSSIAN:
        if family == "gaussian":
            sigma, mu = p["sigma"], abs(p["mu"])
        elif family == "bounded-uniform":
            sigma, mu = (p["b"] - p["a"]) / 2.0, 0.0
        else:
            sigma, mu = abs(p["hi"] - p["lo"]) / 2.0, 0.0
        if family == "gaussian" and mu == 0.0:
            # E exp(g X^2) = (1 - 2 g sigma^2)^(-1/2) = 2
            gamma_exp = 3.0 / (8.0 * sigma**2)
        else:
            bound = max(abs(v) for k, v in p.items() if k in ("a", "b", "lo", "hi", "mu")) \
                if family != "gaussian" else mu + 3.0 * sigma
            gamma_exp = math.log(2.0) / max(bound, 1e-12) ** 2
        return {"sigma": sigma, "gamma_exp": gamma_exp, "beta": 2.0}
    if tail_class == SUB_EXPONENTIAL:
        if family == "laplace":
            mu, b = abs(p["mu"]), p["b"]
            # E exp(c|X|) <= exp(c|mu|) / (1 - c b) = 2
            c = optimize.brentq(lambda c: c * mu - math.log1p(-c * b) - math.log(2.0),
                                0.0, (1.0 - 1e-12) / b)
        elif family == "exponential":
            c = p["lam"] / 2.0
        elif family == "gaussian":
            c = 1.0 / (abs(p["mu"]) + 2.0 * p["sigma"])
        else:
            lo, hi = (p["a"], p["b"]) if family == "bounded-uniform" else (p["lo"], p["hi"])
            c = math.log(2.0) / max(abs(lo), abs(hi), 1e-12)
        return {"c": c}
    # heavy tail
    if family == "pareto":
        shape, xm = p["shape"], p["x_m"]
        beta = (2.0 + shape) / 2.0
        if center:
            shifted = stats.pareto(b=shape, scale=xm, loc=-shape * xm / (shape - 1.0))
            u_bar = float(shifted.expect(lambda x: abs(x) ** beta))
        else:
            u_bar = shape * xm**beta / (shape - beta)
    else:
        nu, scale = p["nu"], p["scale"]
        beta = (2.0 + nu) / 2.0
        u_bar = (scale**beta * nu ** (beta / 2.0) * special.gamma((beta + 1) / 2.0)
                 * special.gamma((nu - beta) / 2.0)
                 / (math.sqrt(math.pi) * special.gamma(nu / 2.0)))
    return {"beta": beta, "u_bar": u_bar}


def sample(spec: DistSpec, n: int, seed: int | np.random.SeedSequence) -> Edf:
    """Draw ``n`` i.i.d. samples from ``spec``; deterministic in (spec, n, seed)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return Edf(spec.draw(rng, n))


def truncate(F: Edf, tau: float, one_sided: bool = False) -> Edf:
    """Move samples outside [-tau, tau) to 0.

    With ``one_sided=True`` only samples above ``tau`` move, i.e. the map
    ``x -> x 1{x <= tau}``.
    """
    if not tau > 0:
        raise ValueError(f"truncation level must be positive, got {tau}")
    x = F.samples
    if one_sided:
        keep = x <= tau
    else:
        keep = (x >= -tau) & (x < tau)
    if keep.all():
        return F
    return Edf(np.where(keep, x, 0.0))


# -- ground truth ------------------------------------------------------------

@dataclass(frozen=True)
class TrueRisk:
    value: float
    method: str  # "closed-form" or "numerical"

    def __float__(self):
        return self.value


_QUAD = {"epsabs": 1e-10, "epsrel": 1e-10, "limit": 500}


def _split_quad(fn, a: float, b: float, points=()) -> float:
    """Integrate over [a, b] (possibly infinite), splitting at finite ``points``."""
    cuts = sorted(p for p in points if a < p < b)
    edges = [a, *cuts, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(fn, lo, hi, **_QUAD)
        total += val
    return total


def _landmarks(dist) -> list[float]:
    return sorted({float(dist.ppf(q)) for q in (1e-6, 0.01, 0.1, 0.5, 0.9, 0.99, 1 - 1e-6)})


def _srm_continuous(dist, Phi) -> float:
    total = float(Phi(np.array(1.0)))
    lo, hi = dist.support()
    marks = _landmarks(dist)
    pos = _split_quad(lambda x: total - float(Phi(np.array(dist.cdf(x)))), max(lo, 0.0), hi,
                      [0.0, *marks]) if hi > 0 else 0.0
    neg = _split_quad(lambda x: float(Phi(np.array(dist.cdf(x)))), lo, min(hi, 0.0),
                      [0.0, *marks]) if lo < 0 else 0.0
    return pos - neg


def _cpt_continuous(dist, u_plus, u_minus, w_plus, w_minus) -> float:
    lo, hi = dist.support()
    marks = _landmarks(dist)
    gain = 0.0
    if hi > 0:
        gain = _split_quad(lambda x: float(w_plus(dist.sf(x)) * u_plus.deriv(np.array(x))),
                           max(lo, 0.0), hi, marks)
    loss = 0.0
    if lo < 0:
        loss = _split_quad(lambda x: float(w_minus(dist.cdf(x)) * abs(u_minus.deriv(np.array(x)))),
                           lo, min(hi, 0.0), marks)
    return gain - loss


def _ubsr_continuous(dist, l, target) -> float:
    def g(xi):
        return dist.expect(lambda x: float(l(np.array(x - xi))), **{"epsabs": 1e-11, "epsrel": 1e-11,
                                                                    "limit": 500})
    m, s = dist.mean(), dist.std()
    lo, hi = m - 2 * s - 1, m + 2 * s + 1
    for _ in range(60):
        if g(lo) > target:
            break
        lo -= (hi - lo)
    for _ in range(60):
        if g(hi) <= target:
            break
        hi += (hi - lo)
    return optimize.brentq(lambda xi: g(xi) - target, lo, hi, xtol=1e-13)


def true_risk(spec: DistSpec, risk: "RiskSpec") -> TrueRisk | None:
    """Exact risk of the distribution, by closed form or adaptive quadrature.

    Returns ``None`` when neither route is implemented for the pair.
    """
    from . import risk as R

    kind = risk.kind
    atoms = spec.atoms()
    if atoms is not None:
        vals, probs = atoms
        return TrueRisk(R.risk_of_atoms(vals, probs, risk), "closed-form")

    dist = spec.scipy()
    mean = spec.mean()
    if kind == "cvar":
        a = risk.alpha
        if spec.family == "gaussian":
            mu, sigma = spec.params["mu"], spec.params["sigma"]
            z = stats.norm.ppf(a)
            return TrueRisk(mu + sigma * stats.norm.pdf(z) / (1.0 - a), "closed-form")
        var = float(dist.ppf(a))
        excess = _split_quad(dist.sf, var, dist.support()[1], _landmarks(dist))
        return TrueRisk(var + excess / (1.0 - a), "numerical")
    if kind == "srm":
        if risk.spectrum.name == "constant":
            return TrueRisk(risk.spectrum.total * mean, "closed-form")
        return TrueRisk(_srm_continuous(dist, risk.spectrum.antiderivative), "numerical")
    if kind == "ubsr":
        if risk.utility.name in ("identity", "linear"):
            slope = risk.utility.slope_max
            return TrueRisk(mean - risk.target / slope, "closed-form")
        return TrueRisk(_ubsr_continuous(dist, risk.utility, risk.target), "numerical")
    if kind in ("cpt", "rdeu"):
        up, um, wp, wm = risk.cpt_functions()
        if _is_identity_cpt(up, um, wp, wm):
            return TrueRisk(mean, "closed-form")
        return TrueRisk(_cpt_continuous(dist, up, um, wp, wm), "numerical")
    return None


def _is_identity_cpt(up, um, wp, wm) -> bool:
    probe = np.linspace(-3, 3, 13)
    ps = np.linspace(0, 1, 11)
    return (np.allclose(up(probe), np.maximum(probe, 0)) and np.allclose(um(probe), np.maximum(-probe, 0))
            and np.allclose(wp(ps), ps) and np.allclose(wm(ps), ps))
