"""Auction instances, value/competitor distributions, budget plans and the
scenario generators used by the experiments and lower-bound checks.

All objects here are immutable after construction.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np

# Lower-bound scenarios are stated with a = 0; the model needs a > 0.
SCENARIO_A = 1e-9

SUM_TOL = 1e-12
N_UNIFORM_ATOMS = 256


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuctionParams:
    """Range ``[a, b]`` for values and bids, horizon ``T`` and budget ``B``."""

    a: float
    b: float
    T: int
    B: float

    def __post_init__(self):
        if not (0 < self.a < self.b < math.inf):
            raise ValueError(f"need 0 < a < b < inf, got a={self.a}, b={self.b}")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"horizon T must be a positive integer, got {self.T}")
        if not (self.B >= 0 and math.isfinite(self.B)):
            raise ValueError(f"budget B must be finite and >= 0, got {self.B}")
        object.__setattr__(self, "T", int(self.T))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "B", float(self.B))

    @property
    def mu_bound(self) -> float:
        """Upper bound ``b/a + b`` on the dual variable."""
        return self.b / self.a + self.b


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointMass:
    v: float
    kind = "point_mass"

    def __post_init__(self):
        object.__setattr__(self, "v", float(self.v))

    @property
    def support(self):
        return self.v, self.v

    def cdf(self, x):
        return np.where(np.asarray(x) >= self.v, 1.0, 0.0)

    def ppf(self, u):
        return np.full(np.shape(u), self.v)

    def mean(self) -> float:
        return self.v

    def atoms(self, n_uniform: int = N_UNIFORM_ATOMS):
        return np.array([self.v]), np.array([1.0])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "v": self.v}


@dataclass(frozen=True)
class Constant(PointMass):
    """Deterministic competitor bid ``m``."""

    kind = "constant"

    @property
    def m(self) -> float:
        return self.v

    def to_dict(self) -> dict:
        return {"kind": self.kind, "m": self.v}


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float
    kind = "uniform"

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"Uniform needs lo <= hi, got ({self.lo}, {self.hi})")
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def support(self):
        return self.lo, self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.hi == self.lo:
            return np.where(x >= self.lo, 1.0, 0.0)
        return np.clip((x - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def ppf(self, u):
        return self.lo + np.asarray(u) * (self.hi - self.lo)

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def atoms(self, n_uniform: int = N_UNIFORM_ATOMS):
        """Equal-mass atoms at mid-quantiles."""
        if self.hi == self.lo:
            return np.array([self.lo]), np.array([1.0])
        q = (np.arange(n_uniform) + 0.5) / n_uniform
        return self.ppf(q), np.full(n_uniform, 1.0 / n_uniform)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True, eq=False)
class Discrete:
    """Finite distribution given as ``(value, probability)`` pairs.

    Atoms are stored sorted by value with duplicates merged.
    """

    pairs: tuple
    kind = "discrete"
    values: np.ndarray = field(init=False, repr=False)
    probs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pairs = [(float(v), float(p)) for v, p in self.pairs]
        if not pairs:
            raise ValueError("Discrete distribution needs at least one atom")
        if any(p < 0 for _, p in pairs):
            raise ValueError("Discrete probabilities must be nonnegative")
        total = sum(p for _, p in pairs)
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"Discrete probabilities sum to {total!r}, not 1")
        merged: dict[float, float] = {}
        for v, p in pairs:
            merged[v] = merged.get(v, 0.0) + p
        vals = np.array(sorted(merged))
        probs = np.array([merged[v] for v in vals])
        object.__setattr__(self, "pairs", tuple(zip(vals.tolist(), probs.tolist())))
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probs", probs)
        vals.setflags(write=False)
        probs.setflags(write=False)

    def __eq__(self, other):
        return isinstance(other, Discrete) and self.pairs == other.pairs

    def __hash__(self):
        return hash(self.pairs)

    @property
    def support(self):
        return float(self.values[0]), float(self.values[-1])

    def cdf(self, x):
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def ppf(self, u):
        """Generalized inverse ``inf{x : F(x) >= u}``."""
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, np.asarray(u), side="left")
        return self.values[np.minimum(idx, len(self.values) - 1)]

    def mean(self) -> float:
        return float(self.values @ self.probs)

    def atoms(self, n_uniform: int = N_UNIFORM_ATOMS):
        return self.values.copy(), self.probs.copy()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "atoms": [list(p) for p in self.pairs]}


ValueDistribution = Union[PointMass, Uniform, Discrete]
CompetitorModel = Union[Uniform, Discrete, Constant]

_VALUE_KINDS = {"point_mass": PointMass, "uniform": Uniform, "discrete": Discrete}
_COMPETITOR_KINDS = {"constant": Constant, "uniform": Uniform, "discrete": Discrete}


def distribution_from_dict(d: dict, competitor: bool = False):
    kinds = _COMPETITOR_KINDS if competitor else _VALUE_KINDS
    kind = d.get("kind")
    if kind not in kinds:
        role = "competitor" if competitor else "value"
        raise ValueError(f"unknown {role} distribution kind {kind!r}")
    if kind == "point_mass":
        return PointMass(d["v"])
    if kind == "constant":
        return Constant(d["m"])
    if kind == "uniform":
        return Uniform(d["lo"], d["hi"])
    return Discrete(tuple(tuple(p) for p in d["atoms"]))


# ---------------------------------------------------------------------------
# Instance, plans, arrivals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BudgetPlan:
    """Per-period spending targets ``rho_hat`` and optional slacks ``eps``.

    When ``budget`` is given the targets must sum to it. Plans built from a
    perturbed prediction (experiment 3) are allowed to leave it unset.
    """

    rho_hat: np.ndarray
    eps: np.ndarray | None = None
    budget: float | None = None

    def __post_init__(self):
        rho = np.array(self.rho_hat, dtype=float)
        if rho.ndim != 1:
            raise ValueError("rho_hat must be one-dimensional")
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise ValueError("rho_hat entries must be finite and nonnegative")
        rho.setflags(write=False)
        object.__setattr__(self, "rho_hat", rho)
        if self.eps is not None:
            eps = np.array(self.eps, dtype=float)
            if eps.shape != rho.shape:
                raise ValueError("eps must have the same length as rho_hat")
            if np.any(eps < 0):
                raise ValueError("eps entries must be nonnegative")
            eps.setflags(write=False)
            object.__setattr__(self, "eps", eps)
        if self.budget is not None:
            total = float(rho.sum())
            tol = 1e-9 * self.budget if self.budget > 0 else 1e-9
            if abs(total - self.budget) > tol:
                raise ValueError(f"plan sums to {total!r}, expected budget {self.budget!r}")

    def __len__(self):
        return len(self.rho_hat)

    def __eq__(self, other):
        if not isinstance(other, BudgetPlan):
            return NotImplemented
        same_eps = (self.eps is None and other.eps is None) or (
            self.eps is not None and other.eps is not None
            and np.array_equal(self.eps, other.eps))
        return np.array_equal(self.rho_hat, other.rho_hat) and same_eps \
            and self.budget == other.budget

    def to_dict(self) -> dict:
        d = {"rho_hat": self.rho_hat.tolist()}
        if self.eps is not None:
            d["eps"] = self.eps.tolist()
        if self.budget is not None:
            d["budget"] = self.budget
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BudgetPlan":
        return cls(d["rho_hat"], d.get("eps"), d.get("budget"))


@dataclass(frozen=True, eq=False)
class Instance:
    params: AuctionParams
    values: tuple
    competitor: CompetitorModel

    def __post_init__(self):
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        p = self.params
        if len(values) != p.T:
            raise ValueError(f"need {p.T} value distributions, got {len(values)}")
        for t, dist in enumerate(values):
            lo, hi = dist.support
            if lo < p.a or hi > p.b:
                raise ValueError(f"value distribution {t} has support ({lo}, {hi}) "
                                 f"outside [{p.a}, {p.b}]")
        lo, hi = self.competitor.support
        if lo < p.a or hi > p.b:
            raise ValueError(f"competitor support ({lo}, {hi}) outside [{p.a}, {p.b}]")

    @property
    def T(self) -> int:
        return self.params.T

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.params == other.params and self.values == other.values
                and self.competitor == other.competitor)

    def with_budget(self, B: float) -> "Instance":
        p = self.params
        return Instance(AuctionParams(p.a, p.b, p.T, B), self.values, self.competitor)

    def to_dict(self, plan: BudgetPlan | None = None) -> dict:
        p = self.params
        d = {
            "params": {"a": p.a, "b": p.b, "T": p.T, "B": p.B},
            "values": [dist.to_dict() for dist in self.values],
            "competitor": self.competitor.to_dict(),
        }
        if plan is not None:
            d["plan"] = plan.to_dict()
        return d


class ArrivalSample(NamedTuple):
    v: float
    m: float


def instance_from_dict(d: dict):
    """Parse an instance document; returns ``(instance, plan or None)``."""
    p = d["params"]
    params = AuctionParams(p["a"], p["b"], p["T"], p["B"])
    values = tuple(distribution_from_dict(v) for v in d["values"])
    inst = Instance(params, values, distribution_from_dict(d["competitor"], competitor=True))
    plan = BudgetPlan.from_dict(d["plan"]) if d.get("plan") is not None else None
    if plan is not None and len(plan) != params.T:
        raise ValueError(f"plan length {len(plan)} does not match T={params.T}")
    return inst, plan


def save_instance(path, instance: Instance, plan: BudgetPlan | None = None) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(plan), indent=2))


def load_instance(path):
    return instance_from_dict(json.loads(Path(path).read_text()))


def uniform_plan(params: AuctionParams) -> BudgetPlan:
    return BudgetPlan(np.full(params.T, params.B / params.T), budget=params.B)


def episode_rng(seed: int, episode: int | None = None) -> np.random.Generator:
    """Independent generator for ``(seed, episode)``; streams never overlap."""
    key = () if episode is None else (int(episode),)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def sample_arrivals(instance: Instance, seed: int, episode: int | None = None) -> np.ndarray:
    """Draw ``(v_t, m_t)`` for every period.

    Returns an array of shape ``(T, 2)``; each row unpacks as an
    :class:`ArrivalSample`. Values and competitor bids use separate uniform
    draws, so ``v_t`` and ``m_t`` are independent.
    """
    rng = episode_rng(seed, episode)
    T = instance.T
    u_v = rng.random(T)
    u_m = rng.random(T)
    values = instance.values
    out = np.empty((T, 2))
    if all(type(d) is Uniform for d in values):
        lo = np.fromiter((d.lo for d in values), float, T)
        hi = np.fromiter((d.hi for d in values), float, T)
        out[:, 0] = lo + u_v * (hi - lo)
    else:
        for t, dist in enumerate(values):
            out[t, 0] = dist.ppf(u_v[t])
    out[:, 1] = instance.competitor.ppf(u_m)
    return out


# ---------------------------------------------------------------------------
# Lower-bound scenarios
# ---------------------------------------------------------------------------

def make_prop1_pair(T: int, W: float):
    """Two instances that agree on the first half and split afterwards.

    The competitor always bids 1/2 and ``B = T/4``. Values are 3/4 in the
    first half and ``3/4 + W/T`` (instance 1) or ``3/4 - W/T`` (instance 2)
    in the second half.

    Returns
    -------
    inst1, inst2 : Instance
    opt1, opt2 : float
        Offline optima ``T/8 + W/2`` and ``T/8``.
    """
    if T < 4 or T % 4:
        raise ValueError(f"T must be a positive multiple of 4, got {T}")
    # instance 2 must still value the good above the competitor's 1/2
    if W < 0 or W / T >= 0.25:
        raise ValueError(f"need 0 <= W < T/4, got W={W}, T={T}")
    params = AuctionParams(SCENARIO_A, 1.0, T, T / 4)
    half = T // 2
    comp = Constant(0.5)
    first = (PointMass(0.75),) * half
    inst1 = Instance(params, first + (PointMass(0.75 + W / T),) * half, comp)
    inst2 = Instance(params, first + (PointMass(0.75 - W / T),) * half, comp)
    return inst1, inst2, T / 8 + W / 2, T / 8


def make_prop2_pair(T: int, V: int):
    """Scenario pair for the prediction-error lower bound.

    The plan offers 1/2 on odd periods and 0 on even ones. Both instances
    have value 3/4 up to period ``T - V``; afterwards instance 1 has 7/8 and
    instance 2 has 5/8.

    Returns ``(inst1, inst2, plan, T/8 + V/8, T/8)``.
    """
    if T < 4 or T % 4:
        raise ValueError(f"T must be a positive multiple of 4, got {T}")
    if int(V) != V or V < 0 or V > T // 2:
        raise ValueError(f"V must be an integer in [0, T/2], got {V}")
    V = int(V)
    params = AuctionParams(SCENARIO_A, 1.0, T, T / 4)
    comp = Constant(0.5)
    head = (PointMass(0.75),) * (T - V)
    inst1 = Instance(params, head + (PointMass(0.875),) * V, comp)
    inst2 = Instance(params, head + (PointMass(0.625),) * V, comp)
    # periods are 1-based: t odd <=> index even
    rho_hat = np.where(np.arange(T) % 2 == 0, 0.5, 0.0)
    plan = BudgetPlan(rho_hat, budget=T / 4)
    return inst1, inst2, plan, T / 8 + V / 8, T / 8


def prop2_reference_allocations(T: int, V: int):
    """Optimal allocations for the two prop-2 scenarios closest to the plan.

    Both scenarios have many optimal allocations (winning any ``T/2``
    periods at price 1/2 among the eligible ones). This picks, for each,
    the optimal allocation with the smallest L1 distance to the
    alternating plan, which puts each scenario at distance ``V/2`` for
    even ``V``.
    """
    _, _, plan, _, _ = make_prop2_pair(T, V)
    rho_hat = plan.rho_hat
    wins = T // 2
    out = []
    for tail in (0.5, 0.0):
        rho = np.zeros(T)
        rho[T - V:] = tail
        need = wins - int(round(rho.sum() / 0.5))
        head_idx = np.arange(T - V)
        # prefer periods the plan already funds
        order = np.concatenate([head_idx[rho_hat[:T - V] > 0], head_idx[rho_hat[:T - V] == 0]])
        rho[order[:need]] = 0.5
        out.append(rho)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Experiment instances
# ---------------------------------------------------------------------------

def _fit_uniform(mean: float, sd: float, lo: float, hi: float, mode: str) -> Uniform:
    half = math.sqrt(3.0) * sd
    if mode == "clip":
        return Uniform(max(lo, mean - half), min(hi, mean + half))
    if mode == "shrink":
        mean = min(max(mean, lo), hi)
        half = min(half, mean - lo, hi - mean)
        return Uniform(mean - half, mean + half)
    raise ValueError(f"unknown support fit mode {mode!r}")


def make_experiment_instance(kind: int, T: int, knob: float = 0.0, seed: int = 0, *,
                             support_fit: str = "shrink", base_mean: float = 1.5):
    """Build the instance for one of the three experiment families.

    Values are uniform with a mean and standard deviation drawn from
    ``[1, 2]``; the competitor is ``Uniform(1, 2)`` and ``B = 0.2 T``.

    Parameters
    ----------
    kind : {1, 2, 3}
        1: per-period random means. 2: mean ``base_mean`` in the first half
        and ``base_mean + knob/T`` in the second. 3: the kind-1 instance plus
        a plan ``max(rho_t - knob, 0)`` where ``rho_t`` is the ideal
        allocation.
    support_fit : {"shrink", "clip"}
        How a uniform whose moment-matched support leaves ``[1, 2]`` is
        repaired. ``"shrink"`` keeps the mean and narrows the width;
        ``"clip"`` cuts the endpoints.

    Returns
    -------
    Instance, or ``(Instance, BudgetPlan)`` for ``kind == 3``.
    """
    if kind not in (1, 2, 3):
        raise ValueError(f"unknown experiment kind {kind!r}")
    a, b = 1.0, 2.0
    params = AuctionParams(a, b, T, 0.2 * T)
    rng = episode_rng(seed)
    sds = rng.uniform(1.0, 2.0, size=T)
    if kind == 2:
        shift = knob / T
        if shift < 0 or base_mean + shift > b:
            raise ValueError(f"mean shift {shift} leaves the value range")
        means = np.full(T, base_mean)
        means[T // 2:] += shift
    else:
        means = rng.uniform(1.0, 2.0, size=T)
    values = tuple(_fit_uniform(m, s, a, b, support_fit) for m, s in zip(means, sds))
    inst = Instance(params, values, Uniform(1.0, 2.0))
    if kind != 3:
        return inst
    if knob < 0:
        raise ValueError("prediction error must be nonnegative")
    from .benchmarks import ideal_allocation

    rho = ideal_allocation(inst)
    return inst, BudgetPlan(np.maximum(rho - knob, 0.0))
