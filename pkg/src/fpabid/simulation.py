"""Episode runner, Monte-Carlo harness, experiment grids and lower-bound checks."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .benchmarks import exhaustive_oracle, solve_mu_star
from .model import (BudgetPlan, Instance, make_experiment_instance, make_prop1_pair,
                    make_prop2_pair, sample_arrivals, uniform_plan)
from .nonstationarity import v_total, w_total
from .policy import DualGradientBidder, StepRecord


class EpisodeResult(NamedTuple):
    total_reward: float
    total_spend: float
    trajectory: list
    seed: int


def run_episode(instance: Instance, plan: BudgetPlan | None = None, eta: float | None = None,
                mu1: float = 0.0, seed: int = 0, episode: int | None = None) -> EpisodeResult:
    """Play one episode on arrivals drawn from ``(seed, episode)``."""
    arrivals = sample_arrivals(instance, seed, episode)
    bidder = DualGradientBidder(instance.params, plan, eta, mu1).fit(arrivals)
    return EpisodeResult(bidder.total_reward_, bidder.total_spend_, bidder.records_, seed)


def _episode_reward(args):
    instance, plan, eta, mu1, seed, k = args
    return run_episode(instance, plan, eta, mu1, seed, k).total_reward


class MonteCarloResult(NamedTuple):
    mean: float
    stderr: float
    rewards: np.ndarray


def monte_carlo(instance: Instance, plan: BudgetPlan | None = None, eta: float | None = None,
                mu1: float = 0.0, K: int = 1000, base_seed: int = 0,
                n_jobs: int = 1) -> MonteCarloResult:
    """Mean and standard error of total reward over ``K`` independent episodes.

    Episode ``k`` always uses stream ``(base_seed, k)``, so results do not
    depend on ``n_jobs``.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    jobs = [(instance, plan, eta, mu1, base_seed, k) for k in range(K)]
    if n_jobs == 1:
        rewards = [_episode_reward(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rewards = list(pool.map(_episode_reward, jobs, chunksize=max(1, K // (4 * n_jobs))))
    rewards = np.array(rewards)
    mean = math.fsum(rewards) / K
    stderr = float(rewards.std(ddof=1) / math.sqrt(K)) if K > 1 else 0.0
    return MonteCarloResult(mean, stderr, rewards)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

DEFAULT_KNOBS = {
    1: [100, 200, 300, 400, 500, 600, 700, 800, 900, 1000],
    2: [0, 20, 40, 60, 80],
    3: [0.0, 0.02, 0.04, 0.06, 0.08],
}
EXPERIMENT_T = 200


@dataclass
class ExperimentConfig:
    """Grid and Monte-Carlo settings for one experiment.

    For kind 1 the knobs are horizons; for kind 2 the value shift ``W``
    (second-half means move up by ``W/T``); for kind 3 the per-period
    prediction error.
    """

    kind: int
    knobs: Sequence[float] | None = None
    T: int = EXPERIMENT_T
    K: int = 200
    seed: int = 0
    n_jobs: int = 1
    support_fit: str = "shrink"
    base_mean: float = 1.5

    def __post_init__(self):
        if self.kind not in (1, 2, 3):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.knobs is None:
            self.knobs = list(DEFAULT_KNOBS[self.kind])
        if self.K < 1:
            raise ValueError("K must be >= 1")

    @classmethod
    def from_dict(cls, kind: int, d: dict) -> "ExperimentConfig":
        allowed = {"knobs", "T", "K", "seed", "n_jobs", "support_fit", "base_mean"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown experiment settings: {sorted(unknown)}")
        return cls(kind=kind, **d)


class ExperimentRow(NamedTuple):
    knob: float
    T: int
    K: int
    mean_reward: float
    stderr: float
    benchmark: float
    relative_error: float
    policy: str

    @property
    def relative_stderr(self) -> float:
        return self.stderr / self.benchmark if self.benchmark > 0 else math.nan


@dataclass
class ExperimentReport:
    kind: int
    rows: list = field(default_factory=list)

    def select(self, policy: str) -> list:
        return [r for r in self.rows if r.policy == policy]


def _row(knob, T, mc: MonteCarloResult, K, benchmark, policy) -> ExperimentRow:
    rel = (benchmark - mc.mean) / benchmark if benchmark > 0 else math.nan
    return ExperimentRow(float(knob), T, K, mc.mean, mc.stderr, benchmark, rel, policy)


def experiment(kind: int, config: ExperimentConfig | None = None) -> ExperimentReport:
    """Relative error of the bidder against the Lagrangian bound over a knob grid.

    The bound ``min_mu V_LR(mu)`` upper-bounds the offline optimum, so the
    reported relative errors are upper bounds on the true ones.

    Kind 1 runs both the uniform plan (``uninformative``) and the ideal
    allocation (``informative``) per horizon; kind 2 the uniform plan per
    shift; kind 3 the perturbed ideal allocation per prediction error.
    """
    cfg = config if config is not None else ExperimentConfig(kind)
    if cfg.kind != kind:
        raise ValueError(f"config is for kind {cfg.kind}, asked for {kind}")
    report = ExperimentReport(kind)
    mc = lambda inst, plan: monte_carlo(inst, plan, None, 0.0, cfg.K, cfg.seed, cfg.n_jobs)
    opts = dict(support_fit=cfg.support_fit, base_mean=cfg.base_mean)
    if kind == 1:
        for T in cfg.knobs:
            T = int(T)
            inst = make_experiment_instance(1, T, 0.0, cfg.seed + T, **opts)
            sol = solve_mu_star(inst)
            report.rows.append(_row(T, T, mc(inst, uniform_plan(inst.params)), cfg.K,
                                    sol.v_lr, "uninformative"))
            plan = BudgetPlan(sol.rho)
            report.rows.append(_row(T, T, mc(inst, plan), cfg.K, sol.v_lr, "informative"))
    elif kind == 2:
        for W in cfg.knobs:
            inst = make_experiment_instance(2, cfg.T, W, cfg.seed, **opts)
            sol = solve_mu_star(inst)
            report.rows.append(_row(W, cfg.T, mc(inst, uniform_plan(inst.params)), cfg.K,
                                    sol.v_lr, "uninformative"))
    else:
        base = make_experiment_instance(1, cfg.T, 0.0, cfg.seed, **opts)
        sol = solve_mu_star(base)
        for eps in cfg.knobs:
            plan = BudgetPlan(np.maximum(sol.rho - eps, 0.0))
            report.rows.append(_row(eps, cfg.T, mc(base, plan), cfg.K, sol.v_lr, "informative"))
    return report


# ---------------------------------------------------------------------------
# Lower-bound scenarios
# ---------------------------------------------------------------------------

ORACLE_GRID = (0.5,)
REDUCED_T = 4


class LowerBoundReport(NamedTuple):
    prop: int
    T: int
    knob: float
    closed_form: tuple
    oracle: tuple | None          # oracle optima of the same pair, when small enough
    reduced_knob: float
    reduced_closed_form: tuple
    reduced_oracle: tuple
    policy_rewards: tuple
    regrets: tuple
    regret_floor: float           # no online policy can do better on both
    deviation: float              # W_T of instance 1 (prop 1) or V_T of the plan (prop 2)


def _pair(prop, T, knob):
    if prop == 1:
        i1, i2, o1, o2 = make_prop1_pair(T, knob)
        return i1, i2, None, (o1, o2)
    i1, i2, plan, o1, o2 = make_prop2_pair(T, int(knob))
    return i1, i2, plan, (o1, o2)


def lower_bound_check(prop: int, T: int, knob: float, seed: int = 0) -> LowerBoundReport:
    """Build the paired hard instances, verify their optima and run the bidder.

    The closed-form optima are cross-checked by :func:`exhaustive_oracle`
    on a ``T = 4`` copy of the construction (and on the pair itself when
    ``T`` is small enough). The bidder's realized regrets are diagnostic.
    """
    if prop not in (1, 2):
        raise ValueError(f"prop must be 1 or 2, got {prop!r}")
    i1, i2, plan, closed = _pair(prop, T, knob)

    def oracle(a, b):
        return tuple(exhaustive_oracle(inst, ORACLE_GRID) for inst in (a, b))

    full = oracle(i1, i2) if T <= 12 else None
    if prop == 1:
        red_knob = knob * REDUCED_T / T
    else:
        red_knob = float(min(REDUCED_T // 2, round(knob * REDUCED_T / T)))
    r1, r2, _, red_closed = _pair(prop, REDUCED_T, red_knob)
    rewards = tuple(run_episode(inst, plan, seed=seed).total_reward for inst in (i1, i2))
    regrets = (closed[0] - rewards[0], closed[1] - rewards[1])
    if prop == 1:
        floor, dev = knob / 4, w_total(i1).w_total
    else:
        floor, dev = knob / 16, float(knob) / 2
    return LowerBoundReport(prop, T, float(knob), closed, full, red_knob, red_closed,
                            oracle(r1, r2), rewards, regrets, floor, dev)
