"""Non-stationarity measures for value-distribution sequences and plans.

Distances between value distributions use the ground cost ``|v1 - v2|``.
For a reward ``(v - (1+mu) x) G(x)`` that is affine in ``v`` with
``sup_x G(x) = 1``, the sup-over-bids cost between two parameterized
distributions reduces to the gap between their means, which for point
masses is exactly ``|v1 - v2|``.
"""
from __future__ import annotations

from collections import Counter
from typing import NamedTuple

import numpy as np

from .model import N_UNIFORM_ATOMS, Instance, Uniform


class DeviationReport(NamedTuple):
    w_total: float
    per_period: np.ndarray
    v_total: float | None = None
    discretization_error: float = 0.0


def _atoms(dist, n_uniform=N_UNIFORM_ATOMS):
    if isinstance(dist, tuple):
        return np.asarray(dist[0], dtype=float), np.asarray(dist[1], dtype=float)
    return dist.atoms(n_uniform)


def wasserstein(F1, F2, n_uniform: int = N_UNIFORM_ATOMS) -> float:
    """1-Wasserstein distance via the monotone (quantile) coupling.

    ``F1`` and ``F2`` are value distributions or ``(values, probs)`` atom
    lists. Uniform distributions are replaced by ``n_uniform`` equal-mass
    atoms at mid-quantiles, each within distance ``width / (4 n_uniform)``
    of the original.
    """
    x1, p1 = _atoms(F1, n_uniform)
    x2, p2 = _atoms(F2, n_uniform)
    o1, o2 = np.argsort(x1, kind="stable"), np.argsort(x2, kind="stable")
    x1, p1, x2, p2 = x1[o1], p1[o1], x2[o2], p2[o2]
    c1, c2 = np.cumsum(p1), np.cumsum(p2)
    c1[-1] = c2[-1] = 1.0
    # common refinement of both quantile functions on [0, 1]
    levels = np.union1d(c1, c2)
    widths = np.diff(np.concatenate(([0.0], levels)))
    q1 = x1[np.minimum(np.searchsorted(c1, levels, side="left"), len(x1) - 1)]
    q2 = x2[np.minimum(np.searchsorted(c2, levels, side="left"), len(x2) - 1)]
    return float(np.sum(widths * np.abs(q1 - q2)))


def mixture_atoms(dists, n_uniform: int = N_UNIFORM_ATOMS):
    """Atoms of the uniform mixture of ``dists``.

    Identical distributions are grouped first, so a stationary sequence
    yields exactly its own atoms.
    """
    counts = Counter(dists)
    n = len(dists)
    xs, ps = [], []
    for d, k in counts.items():
        x, p = _atoms(d, n_uniform)
        xs.append(x)
        ps.append(p * (k / n))
    return np.concatenate(xs), np.concatenate(ps)


def w_total(instance: Instance, n_uniform: int = N_UNIFORM_ATOMS) -> DeviationReport:
    """Sum over periods of the distance from ``F_t`` to the average distribution."""
    dists = instance.values
    mix = mixture_atoms(dists, n_uniform)
    cache: dict = {}
    per = np.array([cache.setdefault(d, wasserstein(d, mix, n_uniform)) for d in dists])
    err = sum(d.width for d in dists if isinstance(d, Uniform)) / (2 * n_uniform)
    return DeviationReport(float(per.sum()), per, None, err)


def v_total(rho, plan) -> float:
    """L1 distance between an allocation and a plan."""
    rho = np.asarray(rho, dtype=float)
    rho_hat = np.asarray(getattr(plan, "rho_hat", plan), dtype=float)
    if rho.shape != rho_hat.shape:
        raise ValueError(f"length mismatch: {rho.shape[0]} vs {rho_hat.shape[0]}")
    return float(np.abs(rho - rho_hat).sum())


def deviation_report(instance: Instance, plan=None, rho=None) -> DeviationReport:
    rep = w_total(instance)
    if plan is None:
        return rep
    if rho is None:
        from .benchmarks import ideal_allocation

        rho = ideal_allocation(instance)
    return rep._replace(v_total=v_total(rho, plan))
