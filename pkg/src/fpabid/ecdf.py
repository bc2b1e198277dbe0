"""Online empirical CDF of observed competitor bids."""
from __future__ import annotations

import math

import numpy as np
from sortedcontainers import SortedList


class EmpiricalCdf:
    """Right-continuous empirical CDF over a sorted multiset of samples.

    With no samples the estimate is identically 1, which makes the first
    target bid the reserve price.

    Parameters
    ----------
    lo, hi : float, optional
        Admissible range for samples. Inserting outside it raises.
    """

    def __init__(self, lo: float = -math.inf, hi: float = math.inf):
        self.lo = lo
        self.hi = hi
        self._samples = SortedList()
        # distinct values and multiplicities in growable buffers, kept in
        # step with _samples; the first _k slots are live
        self._vals = np.empty(16)
        self._counts = np.empty(16, dtype=np.int64)
        self._k = 0
        self._cache = None

    def __len__(self):
        return len(self._samples)

    @property
    def n(self) -> int:
        return len(self._samples)

    def insert(self, m: float) -> "EmpiricalCdf":
        m = float(m)
        if not (self.lo <= m <= self.hi):
            raise ValueError(f"sample {m!r} outside [{self.lo}, {self.hi}]")
        self._samples.add(m)
        k = self._k
        i = int(self._vals[:k].searchsorted(m))
        if i < k and self._vals[i] == m:
            self._counts[i] += 1
        else:
            if k == len(self._vals):
                self._vals = np.concatenate((self._vals, np.empty(k)))
                self._counts = np.concatenate((self._counts, np.empty(k, dtype=np.int64)))
            self._vals[i + 1:k + 1] = self._vals[i:k]
            self._counts[i + 1:k + 1] = self._counts[i:k]
            self._vals[i] = m
            self._counts[i] = 1
            self._k = k + 1
        self._cache = None
        return self

    def extend(self, ms) -> "EmpiricalCdf":
        for m in np.ravel(ms):
            self.insert(m)
        return self

    def query(self, x: float) -> float:
        n = len(self._samples)
        if n == 0:
            return 1.0
        return self._samples.bisect_right(x) / n

    __call__ = query

    def jump_points(self) -> np.ndarray:
        return self.steps()[0]

    def steps(self):
        """Distinct sample values and the CDF value at each of them."""
        if self._cache is None:
            n = len(self._samples)
            k = self._k
            self._cache = (self._vals[:k].copy(), self._counts[:k].cumsum() / n if n else np.empty(0))
        return self._cache

    def sup_error(self, cdf) -> float:
        """``sup_x |G_n(x) - G(x)|`` against a continuous CDF callable.

        Evaluated at the sample points and their left limits, which is
        exact for a continuous ``G``.
        """
        xs, right = self.steps()
        if len(xs) == 0:
            raise ValueError("sup error is undefined without samples")
        left = np.concatenate(([0.0], right[:-1]))
        g = np.asarray(cdf(xs), dtype=float)
        return float(max(np.max(np.abs(right - g)), np.max(np.abs(left - g))))

    def copy(self) -> "EmpiricalCdf":
        other = EmpiricalCdf(self.lo, self.hi)
        other._samples = self._samples.copy()
        other._vals = self._vals.copy()
        other._counts = self._counts.copy()
        other._k = self._k
        return other


def dkw_bound(n: int, delta: float) -> float:
    """Radius ``eps`` with ``P[sup |G_n - G| >= eps] <= delta`` for ``n`` samples."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


def dkw_tail(n: int, eps: float) -> float:
    """Two-sided DKW tail bound ``2 exp(-2 n eps^2)``."""
    return 2.0 * math.exp(-2.0 * n * eps * eps)


def err_envelope(t: int, T: int) -> float:
    """Uniform-in-time estimation error radius after ``t`` samples.

    Holds simultaneously for all ``t <= T`` with probability ``1 - 1/T``.
    """
    if not 1 <= t <= T:
        raise ValueError(f"need 1 <= t <= T, got t={t}, T={T}")
    return math.sqrt((math.log(2.0) + 2.0 * math.log(T)) / (2.0 * t))
