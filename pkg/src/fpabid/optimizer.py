"""Single-auction bid selection.

Maximizes ``(v - (1 + mu) x) G(x)`` over the decision space ``{0} U [a, b]``,
where bidding 0 means abstaining (no win, no payment). Ties go to the
smallest bid, so a best objective of exactly 0 abstains.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .ecdf import EmpiricalCdf
from .model import Constant, Discrete, PointMass, Uniform


class BidChoice(NamedTuple):
    bid: float
    objective: float


def best_bid_step(v: float, mu: float, cdf: EmpiricalCdf, a: float, b: float) -> BidChoice:
    """Exact maximizer against a step CDF.

    Between jumps the objective is linear with slope ``-(1 + mu) G``, so the
    maximum over ``[a, b]`` sits at ``a`` or at a jump point.
    """
    k = 1.0 + mu
    xs, gs = cdf.steps()
    if len(xs):
        i, j = np.searchsorted(xs, (a, b), side="right")
        cand = np.concatenate(([a], xs[i:j]))
        g = np.concatenate(([gs[i - 1] if i else 0.0], gs[i:j]))
    else:
        cand = np.array([a])
        g = np.array([1.0])
    obj = (v - k * cand) * g
    i = int(np.argmax(obj))
    if obj[i] <= 0.0:
        return BidChoice(0.0, 0.0)
    return BidChoice(float(cand[i]), float(obj[i]))


def _fixed_candidates(competitor, a: float, b: float) -> np.ndarray:
    if isinstance(competitor, (Discrete, PointMass)):
        atoms = competitor.atoms()[0]
        return np.unique(np.concatenate(([a], atoms[(atoms >= a) & (atoms <= b)])))
    if isinstance(competitor, Uniform):
        lo, hi = competitor.lo, competitor.hi
        pts = [a, max(a, lo), min(b, hi)]
        return np.unique([p for p in pts if a <= p <= b])
    raise TypeError(f"unsupported competitor model {type(competitor).__name__}")


def best_bids(v, mu: float, competitor, a: float, b: float):
    """Vectorized :func:`best_bid_analytic` over an array of values.

    Returns ``(bids, objectives)`` with the same shape as ``v``.
    """
    v = np.asarray(v, dtype=float)
    flat = v.reshape(-1)
    k = 1.0 + mu
    fixed = _fixed_candidates(competitor, a, b)
    cand = np.broadcast_to(fixed, (flat.size, fixed.size))
    if isinstance(competitor, Uniform) and competitor.hi > competitor.lo:
        lo_r, hi_r = max(a, competitor.lo), min(b, competitor.hi)
        if lo_r <= hi_r:
            vertex = np.clip(0.5 * (flat / k + competitor.lo), lo_r, hi_r)
            cand = np.column_stack([cand, vertex])
    g = competitor.cdf(cand)
    obj = (flat[:, None] - k * cand) * g
    best = obj.max(axis=1)
    # smallest bid among the maximizers
    bid = np.where(obj == best[:, None], cand, np.inf).min(axis=1)
    abstain = best <= 0.0
    bid = np.where(abstain, 0.0, bid)
    best = np.where(abstain, 0.0, best)
    return bid.reshape(v.shape), best.reshape(v.shape)


def best_bid_analytic(v: float, mu: float, competitor, a: float, b: float) -> BidChoice:
    """Optimal bid against a known competitor model.

    For ``Uniform(lo, hi)`` the objective is a concave quadratic on
    ``[lo, hi]`` with vertex ``(v/(1+mu) + lo)/2`` and decreasing beyond
    ``hi``; discrete models reduce to candidate enumeration.
    """
    bid, obj = best_bids(np.array([v]), mu, competitor, a, b)
    return BidChoice(float(bid[0]), float(obj[0]))


def win_probability(x, competitor_or_cdf):
    if isinstance(competitor_or_cdf, EmpiricalCdf):
        return np.vectorize(competitor_or_cdf.query, otypes=[float])(x)
    return competitor_or_cdf.cdf(x)


def expected_consumption(bid, competitor_or_cdf):
    """Expected payment ``x G(x)``; abstention (bid 0) costs nothing."""
    bid = np.asarray(bid, dtype=float)
    out = np.where(bid > 0, bid * win_probability(bid, competitor_or_cdf), 0.0)
    return float(out) if out.ndim == 0 else out
