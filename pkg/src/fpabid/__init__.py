"""Budget-paced bidding in repeated first-price auctions."""
from .benchmarks import (LagrangianSolution, exhaustive_oracle, ideal_allocation,
                         lagrangian_value, plan_benchmark, relaxed_plan_benchmark,
                         single_period_dual, solve_mu_star)
from .ecdf import EmpiricalCdf, dkw_bound
from .model import (AuctionParams, BudgetPlan, Constant, Discrete, Instance, PointMass,
                    Uniform, load_instance, make_experiment_instance, make_prop1_pair,
                    make_prop2_pair, sample_arrivals, save_instance, uniform_plan)
from .nonstationarity import DeviationReport, deviation_report, v_total, w_total, wasserstein
from .optimizer import best_bid_analytic, best_bid_step
from .policy import DualGradientBidder, StepRecord, run_alternate
from .simulation import (EpisodeResult, ExperimentConfig, ExperimentReport, experiment,
                         lower_bound_check, monte_carlo, run_episode)

__version__ = "0.1.0"
