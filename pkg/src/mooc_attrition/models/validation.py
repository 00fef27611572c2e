"""Nested cross-validation and cross-course transfer evaluation.

Balancing, standardization, hyperparameter search and fitting only ever see
training rows.  Every fold records which rows it used so that
:func:`audit_folds` can re-derive the partition and check it independently.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.model_selection import StratifiedKFold

from ..errors import FoldError, LeakageError, SchemaError
from .linear import LinearModel, fit_linear
from .metrics import auc, f_measure
from .sampling import balance_indices

DEFAULT_C_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(mean, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale


@dataclass
class FoldResult:
    fold: int
    auc: float
    f_measure: float
    C: float
    test_rows: np.ndarray
    train_rows: np.ndarray
    inner_auc: dict[float, float] = field(default_factory=dict)


@dataclass
class EvalReport:
    auc: float
    f_measure: float
    per_fold: list[FoldResult]
    n_rows: int
    seed: int
    n_splits: int
    kind: str = "logistic"
    in_sample: bool = False

    @property
    def chosen_hyperparams(self) -> list[dict[str, float]]:
        return [{"C": f.C} for f in self.per_fold]

    @property
    def chosen_C_mode(self) -> float:
        counts = Counter(f.C for f in self.per_fold)
        return max(sorted(counts), key=lambda c: counts[c])


def derive_seeds(seed: int, n: int) -> list[int]:
    """``n`` independent integer sub-seeds from a master seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def stratified_folds(y, n_splits: int, seed: int) -> list[np.ndarray]:
    """Test-row index arrays of a shuffled stratified ``n_splits`` partition."""
    y = np.asarray(y).astype(int)
    counts = np.bincount(y, minlength=2)
    if counts.min() < n_splits:
        raise FoldError(
            f"cannot build {n_splits} stratified folds: smallest class has {counts.min()} rows"
        )
    skf = StratifiedKFold(n_splits=n_splits, shuffle=True, random_state=seed)
    return [test for _, test in skf.split(np.zeros(len(y)), y)]


def outer_folds(y, seed: int, n_splits: int = 10) -> list[np.ndarray]:
    return stratified_folds(y, n_splits, derive_seeds(seed, 1)[0])


def train_and_score(
    X: np.ndarray,
    y: np.ndarray,
    train: np.ndarray,
    test: np.ndarray,
    kind: str,
    C: float,
    seed: int,
    balance_train: bool = True,
) -> tuple[LinearModel, np.ndarray, np.ndarray]:
    """Balance and standardize on ``train`` only, fit, and score ``test``.

    Returns the model, test-set scores and the training rows actually used.
    """
    if balance_train:
        train = train[balance_indices(y[train], seed)]
    scaler = Standardizer.fit(X[train])
    model = fit_linear(scaler.transform(X[train]), y[train], kind, C)
    return model, model.score(scaler.transform(X[test])), train


def _threshold(kind: str) -> float:
    return 0.5 if kind == "logistic" else 0.0


def select_C(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    kind: str,
    C_grid: Sequence[float],
    n_splits: int,
    seed: int,
    balance_train: bool = True,
) -> tuple[float, dict[float, float]]:
    """Grid point with the best mean inner-fold AUC over ``rows``; first in grid order wins ties."""
    fold_seed, *fit_seeds = derive_seeds(seed, n_splits + 1)
    inner = stratified_folds(y[rows], n_splits, fold_seed)
    scores: dict[float, float] = {}
    for C in C_grid:
        aucs = []
        for k, test_local in enumerate(inner):
            mask = np.zeros(len(rows), dtype=bool)
            mask[test_local] = True
            _, s, _ = train_and_score(X, y, rows[~mask], rows[mask], kind, C, fit_seeds[k], balance_train)
            aucs.append(auc(s, y[rows[mask]]))
        scores[float(C)] = float(np.mean(aucs))
    best = max(scores.values())
    return next(C for C in scores if scores[C] == best), scores


def nested_cv(
    X,
    y,
    kind: str = "logistic",
    C_grid: Sequence[float] = DEFAULT_C_GRID,
    seed: int = 0,
    n_outer: int = 10,
    n_inner: int = 5,
    balance_train: bool = True,
) -> EvalReport:
    """Outer stratified folds for evaluation, inner stratified folds to pick ``C``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    if X.ndim == 1:
        X = X[:, None]
    counts = np.bincount(y, minlength=2)
    if counts.min() < max(n_outer, 10):
        raise FoldError(f"need at least 20 rows after balancing; smallest class has {counts.min()}")
    folds = outer_folds(y, seed, n_outer)
    sub_seeds = derive_seeds(seed + 1, 2 * n_outer)
    results = []
    for k, test in enumerate(folds):
        mask = np.ones(len(y), dtype=bool)
        mask[test] = False
        train = np.flatnonzero(mask)
        if np.bincount(y[train], minlength=2).min() < n_inner:
            raise FoldError("a class is too small for the inner folds")
        C, inner = select_C(X, y, train, kind, C_grid, n_inner, sub_seeds[2 * k], balance_train)
        _, scores, used = train_and_score(X, y, train, test, kind, C, sub_seeds[2 * k + 1], balance_train)
        results.append(
            FoldResult(
                fold=k,
                auc=auc(scores, y[test]),
                f_measure=f_measure(scores, y[test], _threshold(kind)),
                C=C,
                test_rows=np.sort(test),
                train_rows=np.sort(used),
                inner_auc=inner,
            )
        )
    return EvalReport(
        auc=float(np.mean([r.auc for r in results])),
        f_measure=float(np.mean([r.f_measure for r in results])),
        per_fold=results,
        n_rows=len(y),
        seed=seed,
        n_splits=n_outer,
        kind=kind,
    )


def audit_folds(report: EvalReport, y) -> None:
    """Raise :class:`LeakageError` unless every fold's training rows avoid its test rows.

    The outer partition is rebuilt from ``y`` and the report's seed rather
    than trusted from the report.
    """
    expected = outer_folds(np.asarray(y).astype(int), report.seed, report.n_splits)
    if len(expected) != len(report.per_fold):
        raise LeakageError("fold count does not match the recorded report")
    seen = np.zeros(len(y), dtype=int)
    for fold, test in zip(report.per_fold, expected):
        test = np.sort(test)
        if not np.array_equal(fold.test_rows, test):
            raise LeakageError(f"fold {fold.fold}: recorded test rows differ from the seeded partition")
        overlap = np.intersect1d(fold.train_rows, test)
        if overlap.size:
            raise LeakageError(f"fold {fold.fold}: {overlap.size} test rows were used in training")
        seen[test] += 1
    if not np.all(seen == 1):
        raise LeakageError("outer test folds do not partition the rows")


def cross_course_eval(
    train_table,
    test_table,
    feature_whitelist: Sequence[str],
    kind: str = "logistic",
    label: str = "semester_dropout",
    C_grid: Sequence[float] = DEFAULT_C_GRID,
    seed: int = 0,
    n_inner: int = 5,
) -> EvalReport:
    """Fit on every row of one course and score every row of another.

    ``C`` is tuned by inner CV on the training course only.  The test course
    is transformed with training statistics and never refitted.
    """
    names = list(feature_whitelist)
    for side, table in (("training", train_table), ("test", test_table)):
        missing = [f for f in names if f not in table.feature_names]
        if missing:
            raise SchemaError(f"{side} table lacks whitelisted features: {', '.join(missing)}")
    Xa, ya = train_table.columns(names), train_table.y(label)
    Xb, yb = test_table.columns(names), test_table.y(label)
    in_sample = train_table is test_table or (
        train_table.course_id == test_table.course_id
        and train_table.students == test_table.students
        and np.array_equal(Xa, Xb)
    )
    tune_seed, fit_seed = derive_seeds(seed, 2)
    rows = np.arange(len(ya))
    C, inner = select_C(Xa, ya, rows, kind, C_grid, n_inner, tune_seed)
    used = rows[balance_indices(ya, fit_seed)]
    scaler = Standardizer.fit(Xa[used])
    model = fit_linear(scaler.transform(Xa[used]), ya[used], kind, C)
    scores = model.score(scaler.transform(Xb))
    result = FoldResult(
        fold=0,
        auc=auc(scores, yb),
        f_measure=f_measure(scores, yb, _threshold(kind)),
        C=C,
        test_rows=np.arange(len(yb)),
        train_rows=used,
        inner_auc=inner,
    )
    return EvalReport(result.auc, result.f_measure, [result], len(yb), seed, 1, kind, in_sample)
