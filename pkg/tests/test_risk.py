import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskconc import DistSpec, Edf, RiskSpec, cpt, cpt_truncated, cvar, estimate, rdeu, srm, tau_schedule, ubsr
from riskconc.functions import Weight, linear_utility, power_weight, tversky_weight
from riskconc.oracles import rdeu_direct
from riskconc.risk import (
    BracketError,
    UnsupportedPair,
    lower_tail_integral,
    risk_of_atoms,
    upper_tail_integral,
)

values = st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=40)
IDENT = dict(w_plus="identity", w_minus="identity")


class TestCvar:
    def test_examples(self):
        assert cvar(Edf([1, 2, 3, 4]), 0.5) == pytest.approx(3.5)
        assert cvar(Edf([2.5] * 7), 0.3) == 2.5
        assert cvar(Edf([0, 10]), 0.9) == pytest.approx(10.0)

    @pytest.mark.parametrize("a", [0.0, 1.0, -0.1, 1.5])
    def test_level_outside_unit_interval(self, a):
        with pytest.raises(ValueError):
            cvar(Edf([1.0]), a)

    @settings(max_examples=200, deadline=None)
    @given(values, st.floats(-1e3, 1e3), st.floats(0.01, 0.99))
    def test_translation_equivariance(self, x, c, a):
        F = Edf(x)
        shifted = Edf(np.asarray(x) + c)
        assert cvar(shifted, a) == pytest.approx(cvar(F, a) + c, abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(values, st.lists(st.floats(0, 10), min_size=40, max_size=40), st.floats(0.01, 0.99))
    def test_monotone_in_samples(self, x, bumps, a):
        F = Edf(x)
        G = Edf(F.samples + np.asarray(bumps[:F.n]))
        assert cvar(F, a) <= cvar(G, a) + 1e-9
        assert srm(F, "power-spectrum(2)") <= srm(G, "power-spectrum(2)") + 1e-9

    def test_value_is_minimum_of_objective(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.normal(size=rng.integers(1, 30))
            a = rng.uniform(0.05, 0.95)
            v = cvar(Edf(x), a)
            # the objective is piecewise linear with kinks at the samples
            obj = [xi + np.maximum(x - xi, 0).mean() / (1 - a) for xi in x]
            assert v == pytest.approx(min(obj), abs=1e-12)


class TestSrm:
    def test_examples(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=17)
        assert srm(Edf(x), "constant") == pytest.approx(x.mean())
        assert srm(Edf([1, 2, 3, 4]), "cvar-spectrum(0.5)") == pytest.approx(3.5)
        assert srm(Edf([0, 1]), "power-spectrum(2)") == pytest.approx(0.75)

    def test_cvar_spectrum_consistency(self):
        rng = np.random.default_rng(4)
        for _ in range(500):
            F = Edf(rng.normal(size=rng.integers(1, 50)))
            a = float(rng.choice([0.1, 0.25, 0.5, 0.9, 0.95]))
            assert srm(F, f"cvar-spectrum({a})") == pytest.approx(cvar(F, a), abs=1e-10)

    def test_table_spectrum(self):
        tab = {"name": "table", "knots": [0.0, 1.0], "values": [0.0, 2.0]}
        assert srm(Edf([0, 1]), tab) == pytest.approx(0.75, abs=1e-8)


class TestUbsr:
    def test_examples(self):
        assert ubsr(Edf([0, 2]), "identity", 0.0) == pytest.approx(1.0, abs=1e-9)
        x = np.array([0.3, -2.0, 5.0])
        assert ubsr(Edf(x), "identity", 0.5) == pytest.approx(x.mean() - 0.5, abs=1e-9)
        assert ubsr(Edf([0.0]), "exp-clipped(-1, 1)", 1.0) == pytest.approx(0.0, abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(values, st.floats(-5, 5), st.sampled_from(["identity", "linear(0.3)", "exp-clipped(-2, 2)",
                                                      "piecewise-linear(0.5, 2)"]))
    def test_root_property(self, x, target, util):
        from riskconc.functions import make_utility
        l = make_utility(util)
        tol = 1e-10
        xi = ubsr(Edf(x), l, target, tol=tol)
        g = lambda v: float(np.mean(l(np.asarray(x) - v)))  # noqa: E731
        assert g(xi) <= target
        assert g(xi - 2 * tol * max(1.0, abs(xi))) > target

    def test_bracket_expands(self):
        assert ubsr(Edf([0.0]), "identity", -1e6) == pytest.approx(1e6, rel=1e-9)

    def test_bracket_failure_reports_interval(self):
        with pytest.raises(BracketError, match="bracket"):
            ubsr(Edf([0.0]), "identity", 1e300, max_doublings=5)


class TestCpt:
    def test_identity_is_mean(self):
        rng = np.random.default_rng(5)
        spec = RiskSpec.cpt(**IDENT)
        for _ in range(200):
            x = rng.normal(size=rng.integers(1, 40))
            assert cpt(Edf(x), *spec.cpt_functions()) == pytest.approx(x.mean(), abs=1e-12)

    def test_tversky_two_point(self):
        # w+(1/2) = 0.420639..., w-(1/2) = 0.453988... from the weight formula
        spec = RiskSpec.cpt()
        assert cpt(Edf([-1, 1]), *spec.cpt_functions()) == pytest.approx(-0.0333481951882735, abs=1e-13)

    def test_all_negative(self):
        x = [-3.0, -1.0, -0.5]
        spec = RiskSpec.cpt(**IDENT)
        assert cpt(Edf(x), *spec.cpt_functions()) == pytest.approx(-np.mean(np.abs(x)))

    def test_truncated_examples(self):
        spec = RiskSpec.cpt(**IDENT)
        F = Edf([-1.5, 0.2, 0.9])
        assert cpt_truncated(F, spec, 10.0) == cpt(F, *spec.cpt_functions())
        assert cpt_truncated(Edf([-5, 1]), spec, 2.0) == pytest.approx(0.5)
        assert cpt_truncated(Edf([3.0]), spec, 3.0) == 0.0

    def test_one_sided_flag(self):
        spec = RiskSpec.cpt(one_sided=True, **IDENT)
        assert cpt_truncated(Edf([-5, 1]), spec, 2.0) == pytest.approx(-2.0)

    def test_rejects_bad_weight(self):
        with pytest.raises(ValueError, match="w\\(0\\)=0"):
            RiskSpec("cpt", u_plus=linear_utility(1), u_minus=linear_utility(1),
                     w_plus=tversky_weight(0.5), w_minus=Weight("shifted", lambda p: 0.5 + 0.5 * p))


class TestRdeu:
    def test_examples(self):
        x = [0.5, -2.0, 3.0]
        assert rdeu(Edf(x), "identity", "identity") == pytest.approx(np.mean(x))
        assert rdeu(Edf([-1, 2]), "identity", "power(2)") == pytest.approx(1.25, abs=1e-12)
        assert rdeu(Edf([5.0]), "linear(3)", "power(0.5)") == pytest.approx(15.0)

    def test_matches_direct_sum(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            F = Edf(rng.normal(size=rng.integers(1, 40)))
            u = linear_utility(rng.uniform(0.2, 3))
            w = power_weight(rng.uniform(0.3, 3))
            assert rdeu(F, u, w) == pytest.approx(rdeu_direct(F, u, w), abs=1e-12)

    def test_utility_must_vanish_at_zero(self):
        with pytest.raises(ValueError, match="vanish"):
            RiskSpec.rdeu("exp-clipped(-1, 1)", "identity")


class TestEstimate:
    def test_dispatch(self):
        F = Edf([1, 2, 3, 4])
        assert estimate(F, RiskSpec.cvar(0.5)) == pytest.approx(3.5)
        assert estimate(F, RiskSpec.srm("constant")) == pytest.approx(2.5)
        assert estimate(F, RiskSpec.ubsr("identity", 0.5)) == pytest.approx(2.0, abs=1e-9)
        spec = RiskSpec.cpt()
        assert estimate(F, spec, math.inf) == cpt(F, *spec.cpt_functions())
        assert estimate(F, spec, 2.5) == cpt_truncated(F, spec, 2.5)
        assert estimate(F, RiskSpec.cvar(0.5), 0.1) == pytest.approx(3.5)


class TestSpecConstants:
    def test_type1(self):
        assert RiskSpec.cvar(0.8).type1_constants == (pytest.approx(5.0), 1.0)
        assert RiskSpec.srm("power-spectrum(3)").type1_constants == (3.0, 1.0)
        assert RiskSpec.ubsr("exp-clipped(0, 1)", 1.0).type1_constants == (pytest.approx(math.e), 1.0)

    def test_type2(self):
        spec = RiskSpec.cpt(u_plus="piecewise-linear(1, 2)", u_minus="linear(3)", holder=(1.5, 0.6))
        c = spec.type2_constants
        assert (c.L1, c.L2, c.L3) == (pytest.approx(7.5), pytest.approx(3.0), pytest.approx(4.5))
        assert (c.a1, c.a2, c.a3, c.gamma) == (0.6, 0.6, 0.6, pytest.approx(0.4))
        # gain part of piecewise-linear(1, 2) still reports the base's slope range [1, 2]
        assert c.K1 == pytest.approx(0.5) and c.K2 == pytest.approx(1.0)

    def test_nominal_holder_default(self):
        assert RiskSpec.cpt().holder == (2.0, 0.61)

    def test_from_config(self):
        spec = RiskSpec.from_config({"kind": "cpt", "holder": {"L": 3, "alpha": 0.5}})
        assert spec.holder == (3.0, 0.5)
        with pytest.raises(ValueError):
            RiskSpec.from_config({"kind": "cvar", "alpha": 0.5, "bogus": 1})


class TestTauSchedule:
    def test_examples(self):
        spec = RiskSpec.cpt()
        assert tau_schedule(spec, DistSpec.gaussian(0, 1), 1) == pytest.approx(1.0)
        lin2 = RiskSpec.cpt(u_plus="piecewise-linear(1, 2)", u_minus="identity")
        lap = DistSpec.laplace(0, 1, tail_params={"c": 1.0})
        assert tau_schedule(lin2, lap, math.e) == pytest.approx(4.0)
        bounded = DistSpec.bounded_uniform(-4, 3)
        ratio = RiskSpec.cpt(u_plus="identity", u_minus="piecewise-linear(1, 2)")
        assert tau_schedule(ratio, bounded, 100) == pytest.approx(max(3 / 1, 4 / 0.5))

    def test_heavy_tail_unsupported(self):
        with pytest.raises(UnsupportedPair):
            tau_schedule(RiskSpec.cpt(), DistSpec.pareto(1, 3), 10)


def test_tail_integrals_exact_for_steps():
    F = Edf([-2.0, 0.0, 1.0, 3.0])
    # 1 - F is 1/2 on [0, 1), 1/4 on [1, 3)
    assert upper_tail_integral(F, 0.0, 1.0) == pytest.approx(0.5 + 0.5)
    assert upper_tail_integral(F, 0.5, 0.5) == pytest.approx(0.5 * 0.5**0.5 + 2 * 0.25**0.5)
    assert upper_tail_integral(F, 5.0, 1.0) == 0.0
    # F is 1/4 on [-2, 0)
    assert lower_tail_integral(F, -1.0, 1.0) == pytest.approx(0.25)
    assert lower_tail_integral(F, -3.0, 1.0) == 0.0


def test_risk_of_atoms_matches_edf():
    rng = np.random.default_rng(8)
    specs = [RiskSpec.cvar(0.7), RiskSpec.srm("power-spectrum(2)"), RiskSpec.ubsr("linear(2)", 0.1),
             RiskSpec.cpt(), RiskSpec.rdeu("identity", "power(2)")]
    for _ in range(50):
        x = np.round(rng.normal(size=rng.integers(1, 20)), 1)
        vals, counts = np.unique(x, return_counts=True)
        for s in specs:
            assert risk_of_atoms(vals, counts / x.size, s) == pytest.approx(estimate(Edf(x), s), abs=1e-9)
