import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpabid.ecdf import EmpiricalCdf
from fpabid.model import Constant, Discrete, Uniform
from fpabid.optimizer import (best_bid_analytic, best_bid_step, best_bids,
                              expected_consumption, win_probability)


def test_step_examples():
    assert best_bid_step(2.0, 0.0, EmpiricalCdf(1, 2), 1, 2) == (1.0, 1.0)
    cdf = EmpiricalCdf(1, 2).extend([1.2, 1.5])
    bid, obj = best_bid_step(2.0, 0.0, cdf, 1, 2)
    assert bid == 1.5 and obj == pytest.approx(0.5)
    for v in np.linspace(1, 2, 21):
        assert best_bid_step(v, 2.0, cdf, 1, 2) == (0.0, 0.0)


def test_analytic_examples():
    bid, obj = best_bid_analytic(2.0, 0.0, Uniform(1, 2), 1, 2)
    assert bid == 1.5 and obj == pytest.approx(0.25)
    assert best_bid_analytic(2.0, 1.0, Uniform(1, 2), 1, 2) == (0.0, 0.0)
    bid, obj = best_bid_analytic(0.75, 0.0, Constant(0.5), 1e-9, 1.0)
    assert bid == 0.5 and obj == pytest.approx(0.25)


def test_analytic_matches_grid():
    grid = np.linspace(1, 2, 10_001)
    rng = np.random.default_rng(0)
    comps = [Uniform(1, 2), Uniform(1.2, 1.6), Discrete([(1.1, 0.3), (1.4, 0.3), (1.9, 0.4)])]
    for _ in range(200):
        v, mu = rng.uniform(1, 2), rng.uniform(0, 1.5)
        for comp in comps:
            _, obj = best_bid_analytic(v, mu, comp, 1, 2)
            brute = max(0.0, np.max((v - (1 + mu) * grid) * comp.cdf(grid)))
            assert obj >= brute - 1e-12
            assert obj <= brute + (1 + mu) * 1e-4 + 1e-12


def test_best_bids_vectorized():
    v = np.array([1.0, 1.5, 2.0])
    bids, objs = best_bids(v, 0.3, Uniform(1, 2), 1, 2)
    for i in range(3):
        assert (bids[i], objs[i]) == best_bid_analytic(v[i], 0.3, Uniform(1, 2), 1, 2)


def test_consumption():
    assert expected_consumption(1.5, Uniform(1, 2)) == pytest.approx(0.75)
    assert expected_consumption(0.0, Uniform(1, 2)) == 0.0
    assert expected_consumption(0.5, Constant(0.5)) == 0.5
    cdf = EmpiricalCdf(1, 2).extend([1.2, 1.8])
    assert win_probability(1.5, cdf) == 0.5
    assert np.allclose(expected_consumption([0.0, 1.5], cdf), [0.0, 0.75])


samples_st = st.lists(st.floats(1, 2), max_size=12)


@settings(max_examples=200, deadline=None)
@given(samples_st, st.floats(1, 2), st.floats(0, 3), st.floats(0, 3))
def test_objective_properties(samples, v, mu1, mu2):
    cdf = EmpiricalCdf(1, 2).extend(samples)
    lo, hi = sorted((mu1, mu2))
    b_lo, o_lo = best_bid_step(v, lo, cdf, 1, 2)
    b_hi, o_hi = best_bid_step(v, hi, cdf, 1, 2)
    assert o_hi >= 0 and o_lo >= 0
    assert o_hi <= o_lo + 1e-12
    assert b_lo == 0.0 or 1 <= b_lo <= 2
    # the returned objective is the objective of the returned bid
    if b_lo > 0:
        assert o_lo == pytest.approx((v - (1 + lo) * b_lo) * cdf.query(b_lo))


def test_tie_breaks_to_smallest_bid():
    # (1.75 - 1.25) * 1/2 == (1.75 - 1.5) * 1, exactly in binary
    cdf = EmpiricalCdf(1, 2).extend([1.25, 1.5])
    assert best_bid_step(1.75, 0.0, cdf, 1, 2) == (1.25, 0.25)
