import math
from dataclasses import replace

import numpy as np
import pytest

from riskconc import DistSpec, RiskSpec
from riskconc.bandit import BanditConfig, gaps, lcb_index, regret_bounds, run
from riskconc.bounds import BoundParams

G0, G1 = DistSpec.gaussian(0, 1), DistSpec.gaussian(1, 1)


def cvar_cfg(arms=(G0, G1), alpha=0.5, horizon=200, seed=0, **kw):
    return BanditConfig(arms, RiskSpec.cvar(alpha), horizon, seed=seed, **kw)


class TestGaps:
    def test_identical_arms(self):
        assert gaps(cvar_cfg((G0, G0))).tolist() == [0.0, 0.0]

    def test_translation_gap(self):
        # CVaR is translation equivariant, so the gap is the mean shift
        np.testing.assert_allclose(gaps(cvar_cfg(alpha=0.95)), [0.0, 1.0], atol=1e-12)

    def test_three_arms(self):
        arms = tuple(DistSpec.gaussian(m, 1) for m in (3.0, 5.0, 4.0))
        np.testing.assert_allclose(gaps(cvar_cfg(arms)), [0, 2, 1], atol=1e-12)


class TestLcbIndex:
    def test_substitution(self):
        p = BoundParams(C=math.e, c=1.0)
        # constant spectrum: L = 1, kappa = 1
        assert lcb_index(5.0, 1, 1, RiskSpec.srm("constant"), p) == pytest.approx(3.0)

    def test_cvar_formula(self):
        p = BoundParams()
        a, T, t = 0.9, 7, 40
        expected = 1.5 - 2 / (1 - a) * math.sqrt(math.log(p.C * t) / (p.c * T))
        assert lcb_index(1.5, T, t, RiskSpec.cvar(a), p) == pytest.approx(expected)

    def test_radius_vanishes(self):
        assert lcb_index(2.0, 10**12, 100, RiskSpec.cvar(0.5)) == pytest.approx(2.0, abs=1e-3)

    def test_fewer_pulls_lower_index(self):
        s = RiskSpec.cvar(0.5)
        assert lcb_index(1.0, 3, 50, s) < lcb_index(1.0, 9, 50, s)

    def test_nonpositive_log_explores(self):
        assert lcb_index(1.0, 3, 1, RiskSpec.cvar(0.5), BoundParams(C=0.5)) == -math.inf

    def test_type2_uses_bounded_tau(self):
        arm = DistSpec.bounded_uniform(-1.0, 2.0)
        spec = RiskSpec.cpt()
        c = spec.type2_constants
        p = BoundParams()
        expected = 0.3 - 2 * c.L1 * 2.0**c.gamma * (math.log(4 * 10) / (0.25 * 5)) ** (c.a1 / 2)
        assert lcb_index(0.3, 5, 10, spec, p, arm) == pytest.approx(expected)


class TestConfig:
    def test_type1_needs_subgaussian_arms(self):
        with pytest.raises(ValueError, match="sub-Gaussian"):
            cvar_cfg((G0, DistSpec.laplace()))

    def test_type2_needs_bounded_arms(self):
        with pytest.raises(ValueError, match="bounded"):
            BanditConfig((G0, G1), RiskSpec.cpt(), 10)
        BanditConfig((G0, G1), RiskSpec.cpt(), 10, n0=2)

    def test_horizon_covers_initialisation(self):
        with pytest.raises(ValueError):
            cvar_cfg(horizon=1)


class TestRun:
    def test_initialisation_only(self):
        tr = run(cvar_cfg(horizon=2, alpha=0.95))
        assert tr.arm.tolist() == [0, 1]
        assert tr.final_regret == pytest.approx(1.0, abs=1e-12)

    def test_identical_arms_no_regret(self):
        tr = run(cvar_cfg((G0, G0), horizon=300))
        assert tr.final_regret == 0.0

    def test_trace_invariants(self):
        tr = run(cvar_cfg(horizon=500, seed=3))
        t = np.arange(1, 501)
        assert np.array_equal(tr.counts.sum(axis=1), t)
        assert np.all(np.diff(tr.regret) >= 0)
        assert np.all(tr.regret <= t * tr.gaps.max() + 1e-9)
        assert np.all(np.isnan(tr.lcb[:2])) and not np.any(np.isnan(tr.lcb[2:]))
        # each round plays the smallest index, lowest arm on ties
        assert np.array_equal(tr.arm[2:], np.argmin(tr.lcb[2:], axis=1))

    def test_deterministic_and_horizon_free(self):
        a, b = run(cvar_cfg(horizon=400, seed=9)), run(cvar_cfg(horizon=400, seed=9))
        assert np.array_equal(a.arm, b.arm) and np.array_equal(a.sample, b.sample)
        short = run(cvar_cfg(horizon=150, seed=9))
        assert np.array_equal(short.arm, a.arm[:150])
        assert np.array_equal(short.estimates, a.estimates[:150], equal_nan=True)

    def test_estimates_match_batch_recomputation(self):
        from riskconc import Edf, cvar
        tr = run(cvar_cfg(horizon=120, seed=2))
        for i in range(2):
            xs = tr.sample[tr.arm == i]
            assert tr.estimates[-1, i] == pytest.approx(cvar(Edf(xs), 0.5), abs=1e-12)

    def test_uniform_policy_ignores_indices(self):
        tr = run(cvar_cfg(horizon=1000, policy="uniform", seed=1))
        assert np.all(np.isnan(tr.lcb))
        assert 400 < tr.counts[-1, 1] < 600

    def test_suboptimal_pulls_logarithmic(self):
        # Delta = 5, alpha = 0.5: 16 log(C n) / ((1 - alpha)^2 Delta^2) + 10 is about 27.1 at n = 200
        alpha, n = 0.5, 200
        cfg = cvar_cfg((G0, DistSpec.gaussian(5, 1)), alpha, n)
        d = gaps(cfg)
        pulls = [run(replace(cfg, seed=s), d).counts[-1, 1] for s in range(100)]
        limit = 16 * math.log(4 * n) / ((1 - alpha) ** 2 * 25) + 10
        assert np.percentile(pulls, 95) <= limit

    def test_type2_bounded_run(self):
        arms = (DistSpec.bounded_uniform(-1, 1), DistSpec.bounded_uniform(0, 2))
        cfg = BanditConfig(arms, RiskSpec.cpt(), 300, seed=4)
        tr = run(cfg)
        assert tr.counts[-1].sum() == 300
        assert tr.gaps[0] == 0.0 and tr.gaps[1] > 0


@pytest.mark.slow
def test_regret_growth_is_sublinear():
    # CVaR at 0.5, unit gap: the log-phase starts well before n = 500
    cfg = cvar_cfg(horizon=4000)
    d = gaps(cfg)
    finals = np.array([run(replace(cfg, seed=s), d).regret[[499, 999, 1999, 3999]] for s in range(100)])
    mean = finals.mean(axis=0)
    per_round = mean / np.array([500, 1000, 2000, 4000])
    assert np.all(np.diff(per_round) < 0)
    assert np.all(mean[1:] / mean[:-1] <= 1.6)


class TestRegretBounds:
    def test_zero_gaps(self):
        dep, free = regret_bounds(cvar_cfg((G0, G0)), 1000)
        assert dep == 0.0
        assert free == pytest.approx(8 / 0.5 * math.sqrt(2 * 1000 * math.log(4000)))

    def test_cvar_verbatim(self):
        a, n = 0.9, 1000
        cfg = cvar_cfg(alpha=a)
        dep, free = regret_bounds(cfg, n)
        lg = math.log(4 * n)
        assert dep == pytest.approx(16 * lg / (1 - a) ** 2 + 2 * (1 + math.pi**2 / 3))
        assert free == pytest.approx(8 / (1 - a) * math.sqrt(2 * n * lg) + (math.pi**2 / 3 + 1))

    def test_gap_free_grows_like_root_n_log_n(self):
        cfg = cvar_cfg()
        f = [regret_bounds(cfg, n)[1] for n in (10**3, 10**5)]
        d = [gaps(cfg).sum() * (1 + math.pi**2 / 3)] * 2
        ratio = (f[1] - d[1]) / (f[0] - d[0])
        assert ratio == pytest.approx(10 * math.sqrt(math.log(4e5) / math.log(4e3)))
