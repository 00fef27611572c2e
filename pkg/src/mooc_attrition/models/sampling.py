"""Class balancing and importance-threshold feature selection."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..errors import DataError


def balance_indices(y, rng: np.random.Generator | int | None) -> np.ndarray:
    """Row indices that keep every minority row and an equal-size random majority sample.

    Returned in ascending order.
    """
    rng = np.random.default_rng(rng)
    y = np.asarray(y).astype(int)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("balancing needs both classes present")
    if len(pos) == len(neg):
        return np.arange(len(y))
    minority, majority = (pos, neg) if len(pos) < len(neg) else (neg, pos)
    kept = rng.choice(majority, size=len(minority), replace=False)
    return np.sort(np.concatenate([minority, kept]))


def balance(X, y, seed: np.random.Generator | int | None = 0) -> tuple[np.ndarray, np.ndarray]:
    idx = balance_indices(y, seed)
    return np.asarray(X)[idx], np.asarray(y)[idx]


def select_features(importances: Mapping[str, float], threshold: float = 0.1) -> list[str]:
    """Features scoring strictly above ``threshold``, most important first."""
    ranked = sorted(importances.items(), key=lambda kv: (-kv[1], kv[0]))
    chosen = [name for name, v in ranked if v > threshold]
    if not chosen:
        raise DataError(
            f"no feature has importance above {threshold}; lower the threshold"
        )
    return chosen
