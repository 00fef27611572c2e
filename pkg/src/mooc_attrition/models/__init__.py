from .linear import LinearModel, fit_linear, logistic_objective
from .metrics import auc, f_measure
from .sampling import balance, balance_indices, select_features
from .tree import TreeNode, gini_importance, grow_tree
from .validation import (
    DEFAULT_C_GRID,
    EvalReport,
    FoldResult,
    audit_folds,
    cross_course_eval,
    nested_cv,
    outer_folds,
)

__all__ = [
    "DEFAULT_C_GRID",
    "EvalReport",
    "FoldResult",
    "LinearModel",
    "TreeNode",
    "audit_folds",
    "auc",
    "balance",
    "balance_indices",
    "cross_course_eval",
    "f_measure",
    "fit_linear",
    "gini_importance",
    "grow_tree",
    "logistic_objective",
    "nested_cv",
    "outer_folds",
    "select_features",
]
