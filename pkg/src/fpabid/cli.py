"""Command-line entry point: ``fpabid {simulate,experiment,benchmark,lowerbound,selftest}``."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .benchmarks import (exhaustive_oracle, lagrangian_value, plan_benchmark,
                         relaxed_plan_benchmark, solve_mu_star)
from .model import (AuctionParams, Discrete, Instance, PointMass, Uniform, episode_rng,
                    instance_from_dict, sample_arrivals)
from .nonstationarity import wasserstein
from .policy import DualGradientBidder
from .simulation import ExperimentConfig, experiment, lower_bound_check, run_episode

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("FPA_SEED")
    if raw is None or raw == "":
        return 0
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"FPA_SEED must be an integer, got {raw!r}") from None
    if seed < 0:
        raise ConfigError(f"FPA_SEED must be nonnegative, got {seed}")
    return seed


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def _load_instance(path):
    if path is None:
        raise ConfigError("--config is required")
    doc = _read_json(path)
    try:
        inst, plan = instance_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc.__class__.__name__}: {exc}") from exc
    return doc, inst, plan


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    return out


def cmd_simulate(args) -> int:
    doc, inst, plan = _load_instance(args.config)
    pol = doc.get("policy", {})
    try:
        res = run_episode(inst, plan, pol.get("eta"), pol.get("mu1", 0.0), args.seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{args.config}: {exc}") from exc
    path = io.emit_trajectory(res.trajectory, _out_dir(args) / "trajectory.csv")
    print(f"total_reward={io.fmt(res.total_reward)} total_spend={io.fmt(res.total_spend)} "
          f"seed={args.seed} -> {path}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    settings = _read_json(args.config) if args.config else {}
    settings = {**settings, "seed": args.seed}
    if args.reps is not None:
        settings["K"] = args.reps
    if args.jobs is not None:
        settings["n_jobs"] = args.jobs
    try:
        cfg = ExperimentConfig.from_dict(args.kind, settings)
        report = experiment(args.kind, cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    out = _out_dir(args)
    path = io.emit_csv(report, out / f"experiment_{args.kind}.csv")
    print(f"wrote {path}")
    if args.svg:
        svg = io.emit_svg(report, out / f"experiment_{args.kind}.svg",
                          title=f"Experiment {args.kind}")
        print(f"wrote {svg}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    doc, inst, plan = _load_instance(args.config)
    name = str(doc.get("id", Path(args.config).stem))
    sol = solve_mu_star(inst)
    rows = [(name, "lagrangian", sol.v_lr, sol.mu_star, sol.slack)]
    if plan is not None:
        rows.append((name, "plan", plan_benchmark(inst, plan), "", ""))
        if plan.eps is not None:
            rows.append((name, "relaxed", relaxed_plan_benchmark(inst, plan, plan.eps), "", ""))
    path = io.emit_benchmarks(rows, _out_dir(args) / "benchmarks.csv")
    for r in rows:
        print(",".join(io.fmt(x) for x in r))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_lowerbound(args) -> int:
    T = args.T
    knob = args.knob if args.knob is not None else T / 10
    if args.prop == 2:
        knob = round(knob)
    try:
        rep = lower_bound_check(args.prop, T, knob, args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for key, val in rep._asdict().items():
        if isinstance(val, tuple):
            val = "(" + ", ".join(io.fmt(float(x)) for x in val) + ")"
        elif val is None:
            val = "-"
        print(f"{key:>20}: {io.fmt(val)}")
    return EXIT_OK


def _selftest_checks(seed: int):
    """Yield ``(label, ok)`` pairs for fast invariants."""
    for prop, T, knob in ((1, 8, 0.8), (2, 8, 1)):
        rep = lower_bound_check(prop, T, knob, seed)
        ok = all(abs(x - y) <= 1e-9 for x, y in zip(rep.closed_form, rep.oracle))
        yield f"prop {prop} closed forms match oracle at T={T}", ok

    rng = episode_rng(seed, 0)
    params = AuctionParams(0.5, 1.0, 4, 1.2)
    worst = math.inf
    for _ in range(10):
        vals = tuple(Discrete(list(zip(rng.uniform(0.5, 1.0, 2), (0.5, 0.5)))) for _ in range(4))
        inst = Instance(params, vals, Discrete([(0.6, 0.5), (0.9, 0.5)]))
        opt = exhaustive_oracle(inst, np.linspace(0.5, 1.0, 5))
        for mu in rng.uniform(0, params.mu_bound, 5):
            worst = min(worst, lagrangian_value(inst, mu) - opt)
    yield "weak duality on random tiny instances", worst >= -1e-9

    inst = Instance(AuctionParams(1.0, 2.0, 200, 40.0), (Uniform(1.0, 2.0),) * 200,
                    Uniform(1.0, 2.0))
    mu_max = 0.0
    for k in range(5):
        bidder = DualGradientBidder(inst.params, eta=1.0, mu1=inst.params.mu_bound)
        res = bidder.fit(sample_arrivals(inst, seed, k))
        mu_max = max(mu_max, max(r.mu_after for r in res.records_))
        if res.total_spend_ > inst.params.B:
            mu_max = math.inf
    yield "dual variable bounded, spend within budget", mu_max <= inst.params.mu_bound

    yield "wasserstein of shifted point masses", \
        abs(wasserstein(PointMass(0.3), PointMass(0.55)) - 0.25) <= 1e-12


def cmd_selftest(args) -> int:
    failed = 0
    for label, ok in _selftest_checks(args.seed):
        print(f"{'PASS' if ok else 'FAIL'}  {label}")
        failed += not ok
    return EXIT_INVARIANT if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON instance or experiment config")
    common.add_argument("--seed", type=int, default=None,
                        help="base seed (default: $FPA_SEED or 0)")
    common.add_argument("--reps", type=int, default=None, help="Monte-Carlo repetitions K")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--svg", action="store_true", help="also write an SVG chart")

    p = argparse.ArgumentParser(prog="fpabid", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one episode, write its trajectory")
    e = sub.add_parser("experiment", parents=[common], help="run an experiment grid")
    e.add_argument("--kind", type=int, choices=(1, 2, 3), required=True)
    e.add_argument("--jobs", type=int, default=None, help="worker processes")
    sub.add_parser("benchmark", parents=[common], help="offline benchmarks of an instance")
    lb = sub.add_parser("lowerbound", parents=[common], help="paired lower-bound instances")
    lb.add_argument("--prop", type=int, choices=(1, 2), required=True)
    lb.add_argument("--T", type=int, default=200)
    lb.add_argument("--knob", type=float, default=None, help="W (prop 1) or V (prop 2)")
    sub.add_parser("selftest", parents=[common], help="fast invariant checks")
    return p


COMMANDS = {"simulate": cmd_simulate, "experiment": cmd_experiment, "benchmark": cmd_benchmark,
            "lowerbound": cmd_lowerbound, "selftest": cmd_selftest}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _default_seed()
        if args.seed < 0:
            raise ConfigError(f"--seed must be nonnegative, got {args.seed}")
        if args.reps is not None and args.reps < 1:
            raise ConfigError(f"--reps must be >= 1, got {args.reps}")
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
