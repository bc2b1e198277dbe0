"""Dual-gradient-descent bidder with online learning of the competitor CDF."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import check_arrivals, check_in_range, check_step_size
from .ecdf import EmpiricalCdf
from .model import AuctionParams, BudgetPlan, uniform_plan
from .optimizer import best_bid_step


class StepRecord(NamedTuple):
    t: int
    v: float
    m: float
    bid: float
    won: bool
    payment: float
    reward: float
    gradient: float
    mu_after: float
    budget_after: float


TRAJECTORY_FIELDS = StepRecord._fields


def _fits(payments: list, x: float, B: float) -> bool:
    """Whether paying ``x`` keeps the exactly rounded total spend within ``B``."""
    return x <= B - math.fsum(payments) and math.fsum(payments + [x]) <= B


def _resolve(params: AuctionParams, plan, eta, mu1):
    plan = uniform_plan(params) if plan is None else plan
    if len(plan) < params.T:
        raise ValueError(f"plan covers {len(plan)} periods, horizon is {params.T}")
    eta = 1.0 / math.sqrt(params.T) if eta is None else eta
    eta = check_step_size(eta)
    mu1 = float(mu1)
    if not 0 <= mu1 <= params.mu_bound:
        raise ValueError(f"initial dual variable must lie in [0, {params.mu_bound}], got {mu1}")
    return plan, eta, mu1


class DualGradientBidder(BaseEstimator):
    """Budget-paced bidder for repeated first-price auctions.

    Each period it bids the maximizer of ``(v - (1 + mu) x) G_t(x)`` with
    ``G_t`` the empirical CDF of past competitor bids, skips the auction
    when that bid exceeds the remaining budget, then moves the dual
    variable by ``mu <- max(0, mu - eta (rho_hat_t - z_t))``.

    Parameters
    ----------
    params : AuctionParams
        Value range, horizon and budget.
    plan : BudgetPlan, optional
        Per-period spending targets. Defaults to ``B/T`` every period.
    eta : float, optional
        Step size in ``(0, 1]``. Defaults to ``1/sqrt(T)``.
    mu1 : float, default=0.0
        Initial dual variable, at most ``b/a + b``.

    Attributes
    ----------
    mu_ : float
        Current dual variable.
    budget_left_ : float
    cdf_ : EmpiricalCdf
    t_ : int
        Index of the next period (1-based).
    records_ : list of StepRecord
    """

    def __init__(self, params: AuctionParams, plan: BudgetPlan | None = None,
                 eta: float | None = None, mu1: float = 0.0):
        self.params = params
        self.plan = plan
        self.eta = eta
        self.mu1 = mu1

    def reset(self):
        p = self.params
        self.plan_, self.eta_, self.mu_ = _resolve(p, self.plan, self.eta, self.mu1)
        self.budget_left_ = p.B
        self.cdf_ = EmpiricalCdf(p.a, p.b)
        self.t_ = 1
        self.records_ = []
        self._payments = []
        self._pending = None
        return self

    def _check_started(self):
        if not hasattr(self, "mu_"):
            raise NotFittedError("call reset() or fit() before bidding")

    def target_bid(self, v: float) -> float:
        self._check_started()
        p = self.params
        return best_bid_step(v, self.mu_, self.cdf_, p.a, p.b).bid

    def bid(self, v: float) -> float:
        """Bid for value ``v`` in the current period."""
        self._check_started()
        p = self.params
        check_in_range(v, p.a, p.b, "private value")
        if self.t_ > p.T:
            raise RuntimeError(f"horizon of {p.T} periods exhausted")
        x = self.target_bid(v)
        if x > 0 and not _fits(self._payments, x, p.B):
            x = 0.0
        self._pending = (float(v), x)
        return x

    def observe(self, x: float, m: float) -> StepRecord:
        """Reveal the competitor bid ``m`` and advance one period."""
        if self._pending is None or self._pending[1] != x:
            raise RuntimeError("observe() must follow bid() with the bid it returned")
        p = self.params
        m = float(check_in_range(m, p.a, p.b, "competitor bid"))
        v = self._pending[0]
        won = x > 0 and x >= m
        z = x if won else 0.0
        g = float(self.plan_.rho_hat[self.t_ - 1]) - z
        self.mu_ = max(0.0, self.mu_ - self.eta_ * g)
        if won:
            self._payments.append(z)
            self.budget_left_ = p.B - math.fsum(self._payments)
        self.cdf_.insert(m)
        rec = StepRecord(self.t_, v, m, x, bool(won), z, (v - x) if won else 0.0,
                         g, self.mu_, self.budget_left_)
        self.records_.append(rec)
        self.t_ += 1
        self._pending = None
        return rec

    def partial_fit(self, X, y=None):
        """Play the auctions in ``X`` (rows ``(v, m)``) from the current state."""
        if not hasattr(self, "mu_"):
            self.reset()
        p = self.params
        X = check_arrivals(X, p.a, p.b)
        for v, m in X:
            self.observe(self.bid(v), m)
        return self

    def fit(self, X, y=None):
        """Reset and play a whole episode."""
        return self.reset().partial_fit(X)

    def predict(self, V):
        """Bids the current state would place for values ``V``; no update."""
        self._check_started()
        V = np.atleast_1d(np.asarray(V, dtype=float))
        check_in_range(V, self.params.a, self.params.b, "private value")
        out = np.empty_like(V)
        for i, v in enumerate(V):
            x = self.target_bid(v)
            out[i] = x if x <= self.budget_left_ else 0.0
        return out

    @property
    def total_reward_(self) -> float:
        return math.fsum(r.reward for r in self.records_)

    @property
    def total_spend_(self) -> float:
        return math.fsum(self._payments)


def run_alternate(params: AuctionParams, plan: BudgetPlan | None, eta: float | None,
                  mu1: float, arrivals):
    """Run the bidder without a budget gate, charging ``b`` per overdrawn win.

    The remaining budget may go negative. A win whose payment exceeds the
    budget left before paying costs an extra ``b`` on top of ``v - x``.

    Returns
    -------
    records : list of StepRecord
        ``reward`` includes the penalty; ``budget_after`` may be negative.
    penalized_total : float
    """
    plan, eta, mu = _resolve(params, plan, eta, mu1)
    a, b = params.a, params.b
    arrivals = check_arrivals(arrivals, a, b)
    cdf = EmpiricalCdf(a, b)
    payments = []
    records = []
    for t, (v, m) in enumerate(arrivals, start=1):
        x = best_bid_step(v, mu, cdf, a, b).bid
        won = x > 0 and x >= m
        z = x if won else 0.0
        reward = (v - x) if won else 0.0
        if won and not _fits(payments, z, params.B):
            reward -= b
        g = float(plan.rho_hat[t - 1]) - z
        mu = max(0.0, mu - eta * g)
        if won:
            payments.append(z)
        cdf.insert(m)
        records.append(StepRecord(t, float(v), float(m), x, bool(won), z, reward, g, mu,
                                  params.B - math.fsum(payments)))
    return records, math.fsum(r.reward for r in records)
