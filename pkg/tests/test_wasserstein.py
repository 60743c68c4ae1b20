import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskconc import Edf, w1_edf, w1_quantile
from riskconc.oracles import w1_grid

samples = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=40)


@pytest.mark.parametrize("w1", [w1_edf, w1_quantile])
def test_examples(w1):
    F = Edf([0.3, -1.2, 4.0])
    assert w1(F, F) == 0.0
    assert w1(Edf([0.0]), Edf([1.0])) == 1.0
    # brute-force grid oracle and the sorted-pair average both give 1
    assert w1(Edf([0.0, 2.0]), Edf([1.0, 3.0])) == pytest.approx(1.0, abs=1e-12)
    # F^-1 = 0 everywhere, G^-1 = 4 on (1/2, 1]
    assert w1(Edf([0.0, 0.0]), Edf([0.0, 4.0])) == pytest.approx(2.0, abs=1e-12)


def test_grid_oracle_on_small_example():
    assert w1_grid(Edf([0.0, 2.0]), Edf([1.0, 3.0]), -1, 4) == pytest.approx(1.0, abs=1e-3)


@settings(max_examples=300, deadline=None)
@given(samples, samples)
def test_forms_agree(x, y):
    F, G = Edf(x), Edf(y)
    assert w1_edf(F, G) == pytest.approx(w1_quantile(F, G), abs=1e-10, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_equal_sizes_reduce_to_sorted_pairs(n, seed):
    rng = np.random.default_rng(seed)
    F, G = Edf(rng.normal(size=n)), Edf(rng.normal(size=n) * 3)
    direct = np.mean(np.abs(F.samples - G.samples))
    assert w1_edf(F, G) == pytest.approx(direct, abs=1e-12)


def test_metric_axioms():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        F, G, H = (Edf(np.round(rng.normal(size=rng.integers(1, 25)), 2)) for _ in range(3))
        d_fg, d_gf = w1_edf(F, G), w1_edf(G, F)
        assert d_fg >= 0
        assert d_fg == pytest.approx(d_gf, abs=1e-12)
        assert d_fg <= w1_edf(F, H) + w1_edf(H, G) + 1e-12
        assert (d_fg == 0) == (F == G)


def test_lipschitz_test_functions_lower_bound():
    rng = np.random.default_rng(2)
    for _ in range(300):
        F = Edf(rng.normal(size=rng.integers(1, 30)))
        G = Edf(rng.normal(1, 2, size=rng.integers(1, 30)))
        d = w1_edf(F, G)
        for a, b in [(-1, 1), (0, 0.5), (-3, -2), (-10, 10)]:
            for sign in (1, -1):
                f = lambda x: sign * np.clip(x, a, b)  # noqa: E731  1-Lipschitz
                assert abs(f(F.samples).mean() - f(G.samples).mean()) <= d + 1e-12
