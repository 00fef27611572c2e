"""L2-regularised logistic regression and linear SVM.

Both minimise ``loss(w, b) + ||w||^2 / (2 C)``; the bias is not penalised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log1p

from ..errors import DataError, UsageError

KINDS = ("logistic", "linear_svm")


@dataclass
class LinearModel:
    kind: str
    weights: np.ndarray
    bias: float
    C: float
    iterations: int = 0
    converged: bool = True

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.bias

    def score(self, X) -> np.ndarray:
        """Probability for logistic models, signed margin for SVMs."""
        z = self.decision_function(X)
        return expit(z) if self.kind == "logistic" else z

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0).astype(int)


def logistic_objective(params: np.ndarray, X: np.ndarray, y: np.ndarray, C: float):
    """Value, gradient and Hessian; ``params`` is ``[w..., b]``."""
    w, b = params[:-1], params[-1]
    z = X @ w + b
    # log(1 + e^z) - y z, written to stay finite for large |z|
    value = np.sum(np.maximum(z, 0) + log1p(np.exp(-np.abs(z))) - y * z) + w @ w / (2 * C)
    p = expit(z)
    r = p - y
    grad = np.append(X.T @ r + w / C, r.sum())
    s = p * (1 - p)
    Xa = np.column_stack([X, np.ones(len(y))])
    hess = (Xa * s[:, None]).T @ Xa
    hess[:-1, :-1] += np.eye(len(w)) / C
    return float(value), grad, hess


def _fit_logistic(X, y, C, tol=1e-6, max_iter=200) -> LinearModel:
    params = np.zeros(X.shape[1] + 1)
    value, grad, hess = logistic_objective(params, X, y, C)
    it = 0
    converged = np.linalg.norm(grad) < tol
    while not converged and it < max_iter:
        it += 1
        try:
            step = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(hess, grad, rcond=None)[0]
        t = 1.0
        slope = grad @ step
        while True:
            cand = params + t * step
            v, g, h = logistic_objective(cand, X, y, C)
            if v <= value + 1e-4 * t * slope or t < 1e-10:
                break
            t /= 2
        params, value, grad, hess = cand, v, g, h
        converged = np.linalg.norm(grad) < tol
    return LinearModel("logistic", params[:-1].copy(), float(params[-1]), C, it, bool(converged))


def _fit_svm(X, y, C, tol=1e-5, max_iter=None) -> LinearModel:
    """Dual SMO with maximal-violating-pair selection (Fan, Chen & Lin 2005).

    Stops when the KKT violation ``m - M`` falls below ``tol``.
    """
    n = len(y)
    max_iter = max_iter or max(100_000, 50 * n)
    ys = np.where(y > 0, 1.0, -1.0)
    Xy = X * ys[:, None]
    QD = np.einsum("ij,ij->i", Xy, Xy)
    alpha = np.zeros(n)
    G = -np.ones(n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        up = ((ys > 0) & (alpha < C)) | ((ys < 0) & (alpha > 0))
        low = ((ys > 0) & (alpha > 0)) | ((ys < 0) & (alpha < C))
        score = -ys * G
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        if score[i] - score[j] < tol:
            converged = True
            break
        Qi = Xy @ Xy[i]
        Qj = Xy @ Xy[j]
        ai, aj = alpha[i], alpha[j]
        if ys[i] != ys[j]:
            quad = max(QD[i] + QD[j] + 2 * Qi[j], 1e-12)
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            elif alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            quad = max(QD[i] + QD[j] - 2 * Qi[j], 1e-12)
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
            elif alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, total
            if total > C:
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, total
        G += Qi * (alpha[i] - ai) + Qj * (alpha[j] - aj)

    w = Xy.T @ alpha
    yG = ys * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = yG[free].mean()
    else:
        ub_mask = (at_upper & (ys < 0)) | (at_lower & (ys > 0))
        lb_mask = (at_upper & (ys > 0)) | (at_lower & (ys < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else 0.0
    return LinearModel("linear_svm", w, float(-rho), C, it, converged)


def hinge_objective(model: LinearModel, X, y) -> float:
    ys = np.where(np.asarray(y) > 0, 1.0, -1.0)
    margins = 1 - ys * model.decision_function(X)
    w = model.weights
    return float(np.maximum(margins, 0).sum() + w @ w / (2 * model.C))


def fit_linear(X, y, kind: str = "logistic", C: float = 1.0) -> LinearModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(float)
    if X.ndim != 2 or len(X) != len(y):
        raise DataError("X must be 2-D with one row per label")
    if not np.isfinite(X).all():
        raise DataError("features must be finite")
    if not C > 0:
        raise UsageError("C must be positive")
    if kind == "logistic":
        return _fit_logistic(X, y, C)
    if kind == "linear_svm":
        return _fit_svm(X, y, C)
    raise UsageError(f"unknown model kind {kind!r}; expected one of {KINDS}")
