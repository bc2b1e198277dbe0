"""Offline benchmarks: Lagrangian relaxation, optimal multiplier, ideal
allocation, per-period plan benchmarks and a brute-force LP oracle.

All benchmarks are in expectation over values and competitor bids and
allow randomized policies, so each is a linear program with one (or, for
the relaxed plan benchmark, ``T + 1``) budget constraints.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .model import Discrete, Instance, PointMass, Uniform
from .optimizer import _fixed_candidates, best_bids

GL_POINTS = 64
GOLDEN_TOL = 1e-8
BISECT_TOL = 1e-10
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@lru_cache(maxsize=None)
def _gauss_legendre(n: int = GL_POINTS):
    return np.polynomial.legendre.leggauss(n)


def _vertex_window(competitor, mu, a, b):
    """Range of ``v`` where the interior vertex is the unclipped optimum."""
    if not isinstance(competitor, Uniform) or competitor.hi <= competitor.lo:
        return None
    lo_r, hi_r = max(a, competitor.lo), min(b, competitor.hi)
    if lo_r > hi_r:
        return None
    k = 1.0 + mu
    return k * (2.0 * lo_r - competitor.lo), k * (2.0 * hi_r - competitor.lo)


def _breakpoints(competitor, mu, a, b, lo, hi):
    """Values of ``v`` in ``(lo, hi)`` where the optimal-bid regime can change.

    Each regime (abstain, a fixed candidate bid, the interior vertex) has a
    value that is a polynomial of degree <= 2 in ``v``; regime switches are
    among the pairwise crossings of these polynomials and the edges of the
    vertex window.
    """
    k = 1.0 + mu
    fixed = _fixed_candidates(competitor, a, b)
    g = competitor.cdf(fixed)
    # polynomials in v, highest degree first: [A, B, C]
    polys = [np.zeros(3)]
    polys += [np.array([0.0, gi, -k * x * gi]) for x, gi in zip(fixed, g)]
    pts = []
    window = _vertex_window(competitor, mu, a, b)
    if window is not None:
        w = competitor.hi - competitor.lo
        c0 = k * competitor.lo
        inv = 1.0 / (4.0 * k * w)
        polys.append(np.array([inv, -2.0 * c0 * inv, c0 * c0 * inv]))
        pts.extend(window)
    for p, q in itertools.combinations(polys, 2):
        d = p - q
        if d[0] != 0.0:
            roots = np.roots(d)
            pts.extend(r.real for r in roots if abs(r.imag) <= 1e-12 * (1 + abs(r.real)))
        elif d[1] != 0.0:
            pts.append(-d[2] / d[1])
    pts = np.array(pts, dtype=float)
    pts = pts[(pts > lo) & (pts < hi)]
    return np.unique(pts)


def _quadrature_nodes(dists, competitor, mu, a, b):
    """Nodes, weights and owner index covering every distribution in ``dists``.

    Atom distributions contribute their atoms; a uniform contributes
    Gauss-Legendre nodes on each piece between regime breakpoints, which
    integrates the piecewise-quadratic integrand exactly.
    """
    nodes, weights = _gauss_legendre()
    bps = None
    vs, ws, ids = [], [], []
    for i, dist in enumerate(dists):
        if isinstance(dist, Uniform) and dist.hi > dist.lo:
            if bps is None:
                bps = _breakpoints(competitor, mu, a, b, a, b)
            lo, hi = dist.lo, dist.hi
            inner = bps[(bps > lo) & (bps < hi)]
            edges = np.concatenate(([lo], inner, [hi]))
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            vs.append((mid[:, None] + half[:, None] * nodes).ravel())
            ws.append((half[:, None] * weights).ravel() / (hi - lo))
        elif isinstance(dist, (Uniform, PointMass, Discrete)):
            v, p = dist.atoms()
            vs.append(v)
            ws.append(p)
        else:
            raise TypeError(f"unsupported value distribution {type(dist).__name__}")
        ids.append(np.full(len(vs[-1]), i))
    return np.concatenate(vs), np.concatenate(ws), np.concatenate(ids)


def batch_period_duals(dists, competitor, mu: float, a: float, b: float):
    """:func:`single_period_dual` for several distributions at once."""
    v, w, ids = _quadrature_nodes(dists, competitor, mu, a, b)
    bid, obj = best_bids(v, mu, competitor, a, b)
    cons = np.where(bid > 0, bid * competitor.cdf(bid), 0.0)
    n = len(dists)
    return np.bincount(ids, w * obj, n), np.bincount(ids, w * cons, n)


def single_period_dual(value_dist, competitor, mu: float, a: float, b: float):
    """Per-period Lagrangian value and expected spend at multiplier ``mu``.

    Returns
    -------
    L : float
        ``E_v[(v - (1+mu) x*) G(x*)]``.
    c : float
        ``E_v[x* G(x*)]``.
    """
    L, c = batch_period_duals([value_dist], competitor, mu, a, b)
    return float(L[0]), float(c[0])


class _PeriodTable:
    """Evaluates per-period ``(L, c)`` once per distinct distribution."""

    def __init__(self, instance: Instance):
        self.instance = instance
        p = instance.params
        self.a, self.b = p.a, p.b
        index: dict = {}
        self.groups = np.array([index.setdefault(d, len(index)) for d in instance.values])
        self.unique = list(index)
        self.counts = np.bincount(self.groups, minlength=len(self.unique))

    def unique_eval(self, mu: float):
        return batch_period_duals(self.unique, self.instance.competitor, mu, self.a, self.b)

    def per_period(self, mu: float):
        L, c = self.unique_eval(mu)
        return L[self.groups], c[self.groups]

    def totals(self, mu: float):
        L, c = self.unique_eval(mu)
        return float(self.counts @ L), float(self.counts @ c)


def lagrangian_value(instance: Instance, mu: float) -> float:
    """``mu B + sum_t L(mu, F_t)``: an upper bound on the offline optimum."""
    if mu < 0:
        raise ValueError(f"multiplier must be nonnegative, got {mu}")
    L, _ = _PeriodTable(instance).totals(mu)
    return mu * instance.params.B + L


def period_duals(instance: Instance, mu: float, rho) -> np.ndarray:
    """Per-period dual functions ``D_t(mu) = mu rho_t + L(mu, F_t)``."""
    L, _ = _PeriodTable(instance).per_period(mu)
    return mu * np.asarray(rho, dtype=float) + L


def golden_section(f, lo: float, hi: float, tol: float = GOLDEN_TOL):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(x2)
    x = 0.5 * (lo + hi)
    return x, f(x)


def _bisect_decreasing(f, target: float, lo: float, hi: float, tol: float = BISECT_TOL):
    """Bracket ``f(mu) = target`` for nonincreasing ``f`` with ``f(lo) > target >= f(hi)``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
    return lo, hi


class LagrangianSolution(NamedTuple):
    mu_star: float
    v_lr: float
    rho: np.ndarray
    slack: float


def solve_mu_star(instance: Instance) -> LagrangianSolution:
    """Minimize the Lagrangian bound over ``mu >= 0``.

    The minimizer lies in ``[0, b/a + b]``: beyond ``b/a`` every bid
    abstains, so the bound only grows. Golden-section search locates it;
    a bisection on expected spend then brackets the point where spend
    crosses ``B``. At a kink of the piecewise-linear bound (discrete
    instances) the allocation mixes the spends on either side of the
    bracket so that it sums to ``B``.
    """
    p = instance.params
    table = _PeriodTable(instance)
    B = p.B
    _, c0 = table.totals(0.0)
    if c0 <= B:
        L, rho = table.per_period(0.0)
        return LagrangianSolution(0.0, float(L.sum()), rho, B - float(rho.sum()))

    def value(mu):
        return mu * B + table.totals(mu)[0]

    mu_gs, _ = golden_section(value, 0.0, p.mu_bound)
    spend = lambda mu: table.totals(mu)[1]
    lo, hi = max(0.0, mu_gs - 1e-6), min(p.mu_bound, mu_gs + 1e-6)
    if not (spend(lo) > B >= spend(hi)):
        lo, hi = 0.0, p.mu_bound
    lo, hi = _bisect_decreasing(spend, B, lo, hi)
    _, c_lo = table.per_period(lo)
    _, c_hi = table.per_period(hi)
    s_lo, s_hi = c_lo.sum(), c_hi.sum()
    theta = (B - s_hi) / (s_lo - s_hi) if s_lo > s_hi else 0.0
    rho = c_hi + theta * (c_lo - c_hi)
    mu_star = 0.5 * (lo + hi)
    v_lr = value(mu_star)
    if value(mu_gs) < v_lr:
        mu_star, v_lr = mu_gs, value(mu_gs)
    return LagrangianSolution(mu_star, v_lr, rho, B - float(rho.sum()))


def ideal_allocation(instance: Instance) -> np.ndarray:
    """Expected per-period spend of the relaxed optimum at ``mu*``."""
    return solve_mu_star(instance).rho


# ---------------------------------------------------------------------------
# Per-period plan benchmarks
# ---------------------------------------------------------------------------

class _CappedPeriod(NamedTuple):
    """Optimum of one period under an expected-spend cap."""

    value: float      # best expected reward with spend <= cap
    spend: float
    mu_lo: float      # multiplier bracket; 0, 0 when the cap is slack
    mu_hi: float


def _period_funcs(dist, competitor, a, b):
    cache = {}

    def at(mu):
        if mu not in cache:
            L, c = single_period_dual(dist, competitor, mu, a, b)
            cache[mu] = (L + mu * c, c)  # (reward, spend)
        return cache[mu]

    return at


def _capped_period(at, cap: float, mu_max: float) -> _CappedPeriod:
    r0, c0 = at(0.0)
    if c0 <= cap:
        return _CappedPeriod(r0, c0, 0.0, 0.0)
    lo, hi = _bisect_decreasing(lambda mu: at(mu)[1], cap, 0.0, mu_max)
    (r_lo, c_lo), (r_hi, c_hi) = at(lo), at(hi)
    theta = (cap - c_hi) / (c_lo - c_hi) if c_lo > c_hi else 0.0
    return _CappedPeriod(r_hi + theta * (r_lo - r_hi), cap, lo, hi)


def plan_benchmark(instance: Instance, plan) -> float:
    """Best expected reward when period ``t`` may spend at most ``rho_hat_t``.

    Each period is a one-constraint LP solved by bisecting its own
    multiplier and mixing the two bracketing bids.
    """
    p = instance.params
    rho_hat = np.asarray(plan.rho_hat, dtype=float)
    funcs = {}
    total = 0.0
    for dist, cap in zip(instance.values, rho_hat):
        at = funcs.setdefault(dist, _period_funcs(dist, instance.competitor, p.a, p.b))
        total += _capped_period(at, float(cap), p.mu_bound).value
    return total


def relaxed_plan_benchmark(instance: Instance, plan, eps, B: float | None = None) -> float:
    """Plan benchmark with caps ``rho_hat_t + eps_t`` plus a global budget ``B``.

    A global multiplier ``lam`` is bisected so that total spend meets ``B``;
    given ``lam``, period ``t`` uses the multiplier ``max(lam, mu_t)`` where
    ``mu_t`` is the multiplier that enforces its own cap.
    """
    p = instance.params
    B = p.B if B is None else float(B)
    caps = np.asarray(plan.rho_hat, dtype=float) + np.asarray(eps, dtype=float)
    if np.any(np.asarray(eps) < 0):
        raise ValueError("violation slacks must be nonnegative")
    funcs = {}
    periods = []
    for dist, cap in zip(instance.values, caps):
        at = funcs.setdefault(dist, _period_funcs(dist, instance.competitor, p.a, p.b))
        periods.append((at, _capped_period(at, float(cap), p.mu_bound)))

    def totals(lam):
        reward = spend = 0.0
        for at, capped in periods:
            if capped.mu_hi > 0 and lam < capped.mu_hi:
                reward += capped.value
                spend += capped.spend
            else:
                r, c = at(lam)
                reward += r
                spend += c
        return reward, spend

    r0, s0 = totals(0.0)
    if s0 <= B:
        return r0
    lo, hi = _bisect_decreasing(lambda lam: totals(lam)[1], B, 0.0, p.mu_bound)
    (r_lo, s_lo), (r_hi, s_hi) = totals(lo), totals(hi)
    theta = (B - s_hi) / (s_lo - s_hi) if s_lo > s_hi else 0.0
    return r_hi + theta * (r_lo - r_hi)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

ORACLE_MAX_T = 12
ORACLE_MAX_GRID = 6
ORACLE_MAX_ATOMS = 3


def _pareto(cost: np.ndarray, reward: np.ndarray):
    """Points not dominated by a cheaper-or-equal point with more reward."""
    order = np.lexsort((-reward, cost))
    cost, reward = cost[order], reward[order]
    best = np.maximum.accumulate(reward)
    keep = np.ones(len(cost), dtype=bool)
    keep[1:] = reward[1:] > best[:-1]
    return cost[keep], reward[keep]


def _mixed_value(cost, reward, cap: float) -> float:
    """Best reward of a mixture of at most two points with expected cost <= cap."""
    le = cost <= cap
    best = reward[le].max()
    gt = ~le
    if gt.any():
        ci, ri = cost[le][:, None], reward[le][None, :].T
        cj, rj = cost[gt][None, :], reward[gt][None, :]
        mix = ri + (rj - ri) * (cap - ci) / (cj - ci)
        best = max(best, float(mix.max()))
    return float(best)


def _upper_hull(cost, reward):
    """Concave increasing envelope through Pareto points, starting at the cheapest."""
    hull = []
    for c, r in zip(cost, reward):
        while len(hull) >= 2:
            (c1, r1), (c2, r2) = hull[-2], hull[-1]
            if (r2 - r1) * (c - c1) <= (r - r1) * (c2 - c1):
                hull.pop()
            else:
                break
        hull.append((c, r))
    return hull


def _pair_points(instance: Instance, grid: np.ndarray):
    """Per period: list over value atoms of (prob-weighted cost, reward) per grid bid."""
    G = instance.competitor.cdf(grid)
    win_cost = np.where(grid > 0, grid * G, 0.0)
    out = []
    for dist in instance.values:
        vals, probs = dist.atoms()
        rew = np.where(grid > 0, (vals[:, None] - grid[None, :]) * G[None, :], 0.0)
        out.append([(pr * win_cost, pr * rw) for pr, rw in zip(probs, rew)])
    return out


def _check_oracle_inputs(instance: Instance, grid):
    p = instance.params
    grid = np.unique(np.concatenate(([0.0], np.asarray(grid, dtype=float))))
    if p.T > ORACLE_MAX_T:
        raise ValueError(f"oracle supports T <= {ORACLE_MAX_T}, got {p.T}")
    if len(grid) > ORACLE_MAX_GRID + 1:
        raise ValueError(f"oracle supports at most {ORACLE_MAX_GRID} bids, got {len(grid) - 1}")
    nonzero = grid[grid > 0]
    if np.any(nonzero < p.a) or np.any(nonzero > p.b):
        raise ValueError(f"grid bids must be 0 or lie in [{p.a}, {p.b}]")
    for dist in instance.values:
        if not isinstance(dist, (PointMass, Discrete)):
            raise ValueError("oracle needs point-mass or discrete value distributions")
        if len(dist.atoms()[0]) > ORACLE_MAX_ATOMS:
            raise ValueError(f"oracle supports at most {ORACLE_MAX_ATOMS} atoms per period")
    return grid


def _period_envelope(pairs):
    """Pareto points of one period over all deterministic value-to-bid maps."""
    costs = [c for c, _ in pairs]
    rewards = [r for _, r in pairs]
    c = np.array([sum(x) for x in itertools.product(*costs)])
    r = np.array([sum(x) for x in itertools.product(*rewards)])
    return _pareto(c, r)


def exhaustive_oracle(instance: Instance, bid_grid, constraint: str = "global",
                      plan=None, eps=None) -> float:
    """Exact LP optimum over policies that bid on ``bid_grid`` (plus abstaining).

    ``constraint`` selects the benchmark:

    ``"global"``
        expected total spend ``<= B``. All deterministic maps from
        ``(period, value)`` to a bid are enumerated (with Pareto pruning of
        partial maps, which never discards a point of the upper envelope),
        and two-point mixtures handle the binding constraint.
    ``"plan"``
        expected spend of period ``t`` ``<= rho_hat_t``; enumerated period by
        period with a two-point mixture per period.
    ``"relaxed"``
        caps ``rho_hat_t + eps_t`` and total ``<= B``; per-period concave
        envelopes are combined greedily by slope, which is exact for a sum
        of concave functions under one budget.

    Only for tiny instances: ``T <= 12``, at most 6 bids and 3 value atoms.
    """
    grid = _check_oracle_inputs(instance, bid_grid)
    B = instance.params.B
    points = _pair_points(instance, grid)
    if constraint == "global":
        cost, reward = np.zeros(1), np.zeros(1)
        for period in points:
            for pc, pr in period:
                cost, reward = _pareto((cost[:, None] + pc[None, :]).ravel(),
                                       (reward[:, None] + pr[None, :]).ravel())
        return _mixed_value(cost, reward, B)
    if plan is None:
        raise ValueError(f"constraint {constraint!r} needs a plan")
    caps = np.asarray(plan.rho_hat, dtype=float)
    if constraint == "plan":
        return float(sum(_mixed_value(*_period_envelope(period), cap)
                         for period, cap in zip(points, caps)))
    if constraint != "relaxed":
        raise ValueError(f"unknown constraint {constraint!r}")
    if eps is None:
        raise ValueError("relaxed constraint needs eps")
    caps = caps + np.asarray(eps, dtype=float)
    segments = []
    for period, cap in zip(points, caps):
        hull = _upper_hull(*_period_envelope(period))
        for (c1, r1), (c2, r2) in zip(hull, hull[1:]):
            if c1 >= cap:
                break
            if c2 > cap:
                r2 = r1 + (r2 - r1) * (cap - c1) / (c2 - c1)
                c2 = cap
            segments.append(((r2 - r1) / (c2 - c1), c2 - c1))
    segments.sort(key=lambda s: -s[0])
    left, total = B, 0.0
    for slope, width in segments:
        if slope <= 0 or left <= 0:
            break
        take = min(width, left)
        total += slope * take
        left -= take
    return float(total)
