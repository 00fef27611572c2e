from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from ..errors import DataError


def auc(scores, labels) -> float:
    """Area under the ROC curve via the Mann-Whitney U statistic.

    A tied positive/negative pair counts one half.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC is undefined unless both classes are present")
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def f_measure(predictions, labels, threshold: float = 0.5) -> float:
    """F1 of the positive class; predictions at or above ``threshold`` are positive."""
    pred = np.asarray(predictions, dtype=float) >= threshold
    labels = np.asarray(labels).astype(bool)
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)
