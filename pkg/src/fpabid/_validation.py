"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils import check_array


def check_in_range(x, a: float, b: float, name: str = "value"):
    if isinstance(x, (float, int, np.floating)):
        if not a <= x <= b:
            raise ValueError(f"{name} {x!r} outside [{a}, {b}]")
        return float(x)
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < a) or np.any(arr > b):
        bad = arr[(arr < a) | (arr > b)].ravel()[0]
        raise ValueError(f"{name} {bad!r} outside [{a}, {b}]")
    return arr


def check_arrivals(X, a: float, b: float) -> np.ndarray:
    """Validate an arrival matrix with columns ``(v, m)``."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=0)
    if X.shape[1] != 2:
        raise ValueError(f"arrivals need 2 columns (v, m), got {X.shape[1]}")
    check_in_range(X[:, 0], a, b, "private value")
    check_in_range(X[:, 1], a, b, "competitor bid")
    return X


def check_step_size(eta: float) -> float:
    eta = float(eta)
    if not 0 < eta <= 1:
        raise ValueError(f"step size must lie in (0, 1], got {eta}")
    return eta
