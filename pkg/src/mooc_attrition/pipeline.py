"""Named experiments that turn course files into CSV reports.

``graph_comparison``
    social-feature models under both graph constructions;
``weekly_prediction``
    per-week feature selection and nested CV for every target;
``survival``
    Cox models on all features and on social features only;
``cross_course``
    train on one offering, test on another, week by week.
"""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, NumericError, SchemaError, UsageError
from .featurize import LABELS, WeeklyFeatureTable, assemble_weekly, behavioral_features, feature_names
from .forum_graph import GRAPH_KINDS
from .graph_metrics import SOCIAL_FEATURES
from .ingest import CourseData, CoursePaths, dataset_summary, filter_on_schedule, load_course
from .models import (
    DEFAULT_C_GRID,
    balance_indices,
    cross_course_eval,
    gini_importance,
    nested_cv,
    select_features,
)
from .survival import fit_model, model_covariates, write_hazard_csv

STATIC_TARGETS = ("semester_dropout", "certificate")
SURVIVAL_MODELS = ("no_grade", "social")


@dataclass
class ExperimentSpec:
    courses: Sequence[CoursePaths | str | Path] = ()
    graph_kinds: Sequence[str] = GRAPH_KINDS
    targets: Sequence[str] = LABELS
    weeks: Sequence[int] | None = None
    model_kind: str = "logistic"
    seed: int = 0
    out_dir: str | Path | None = None
    feature_whitelist: Sequence[str] | None = None
    importance_threshold: float = 0.1
    C_grid: Sequence[float] = DEFAULT_C_GRID

    def __post_init__(self) -> None:
        bad = [k for k in self.graph_kinds if k not in GRAPH_KINDS]
        if bad:
            raise UsageError(f"unknown graph kind(s): {', '.join(bad)}")
        bad = [t for t in self.targets if t not in LABELS]
        if bad:
            raise UsageError(f"unknown target(s): {', '.join(bad)}")


@dataclass
class Report:
    name: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for row in self.rows:
                w.writerow([_fmt(row.get(c, "")) for c in self.columns])
        return path

    def column(self, name: str) -> list:
        return [r.get(name) for r in self.rows]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6f}"
    if isinstance(v, (list, tuple)):
        return ";".join(str(x) for x in v)
    return str(v)


def load_courses(spec: ExperimentSpec) -> list[CourseData]:
    """Load every course in the spec and drop off-schedule students."""
    out = []
    for src in spec.courses:
        paths = src if isinstance(src, CoursePaths) else CoursePaths.in_directory(src)
        course = load_course(paths.events, paths.forum, paths.outcomes, paths.config)
        out.append(filter_on_schedule(course)[0])
    return out


def _courses(spec: ExperimentSpec, courses: Sequence[CourseData] | None, n: int | None = None) -> list[CourseData]:
    courses = list(courses) if courses is not None else load_courses(spec)
    if n is not None and len(courses) != n:
        raise UsageError(f"this experiment needs exactly {n} course(s), got {len(courses)}")
    return courses


def _weeks(spec: ExperimentSpec, course: CourseData) -> list[int]:
    W = course.config.num_weeks
    weeks = list(spec.weeks) if spec.weeks else list(range(1, W + 1))
    bad = [w for w in weeks if not 1 <= w <= W]
    if bad:
        raise UsageError(f"weeks out of range 1..{W}: {bad}")
    return weeks


def _write(report: Report, spec: ExperimentSpec) -> Report:
    if spec.out_dir is not None:
        report.to_csv(Path(spec.out_dir) / f"{report.name}.csv")
    return report


def _classes_ok(y: np.ndarray) -> str | None:
    counts = np.bincount(y, minlength=2)
    if counts.min() == 0:
        return "single class"
    return None


_EVAL_COLUMNS = ["n_rows", "auc", "f_measure", "chosen_C", "status", "reason"]


def _evaluate(X: np.ndarray, y: np.ndarray, spec: ExperimentSpec) -> dict:
    reason = _classes_ok(y)
    if reason:
        return {"n_rows": len(y), "status": "skipped", "reason": reason}
    try:
        rep = nested_cv(X, y, spec.model_kind, spec.C_grid, spec.seed)
    except DataError as exc:
        return {"n_rows": len(y), "status": "skipped", "reason": str(exc)}
    return {
        "n_rows": len(y),
        "auc": rep.auc,
        "f_measure": rep.f_measure,
        "chosen_C": rep.chosen_C_mode,
        "status": "ok",
        "reason": "",
    }


# ---------------------------------------------------------------------------


def run_summary(spec: ExperimentSpec, courses: Sequence[CourseData] | None = None) -> Report:
    courses = _courses(spec, courses)
    cols = ["course_id", *dataset_summary(courses[0]).__dataclass_fields__] if courses else ["course_id"]
    report = Report("summary", cols)
    for c in courses:
        report.rows.append({"course_id": c.config.course_id, **asdict(dataset_summary(c))})
    return _write(report, spec)


def run_graph_comparison(spec: ExperimentSpec, courses: Sequence[CourseData] | None = None) -> Report:
    """Social-feature models on graph-resident students, one row per (kind, target)."""
    (course,) = _courses(spec, courses, 1)
    week = max(_weeks(spec, course))
    targets = [t for t in STATIC_TARGETS if t in spec.targets] or list(STATIC_TARGETS)
    report = Report(
        "graph_comparison",
        ["course_id", "week", "graph_kind", "target", "seed", "selected_features", "graph_nodes", *_EVAL_COLUMNS],
    )
    for kind in spec.graph_kinds:
        table = assemble_weekly(course, week=week, graph_kind=kind)
        on_graph = table.X[:, [table.feature_names.index(f) for f in ("in_degree", "out_degree")]].sum(axis=1) > 0
        sub = table.subset([s for s, g in zip(table.students, on_graph) if g])
        for target in targets:
            row = {
                "course_id": course.config.course_id,
                "week": week,
                "graph_kind": kind,
                "target": target,
                "seed": spec.seed,
                "selected_features": list(SOCIAL_FEATURES),
                "graph_nodes": len(sub),
            }
            if len(sub) == 0:
                row.update(n_rows=0, status="skipped", reason="graph empty")
            else:
                row.update(_evaluate(sub.columns(SOCIAL_FEATURES), sub.y(target), spec))
            report.rows.append(row)
    return _write(report, spec)


def rank_features(table: WeeklyFeatureTable, target: str, seed: int) -> dict[str, float]:
    """Gini importances on a class-balanced sample of the table."""
    y = table.y(target)
    idx = balance_indices(y, seed)
    return gini_importance(table.X[idx], y[idx], table.feature_names)


def run_weekly_prediction(spec: ExperimentSpec, courses: Sequence[CourseData] | None = None) -> Report:
    (course,) = _courses(spec, courses, 1)
    kind = spec.graph_kinds[0]
    report = Report(
        "weekly_prediction",
        ["course_id", "week", "graph_kind", "target", "seed", "selected_features", "importances", *_EVAL_COLUMNS],
    )
    for week in _weeks(spec, course):
        table = assemble_weekly(course, week=week, graph_kind=kind)
        for target in spec.targets:
            row = {
                "course_id": course.config.course_id,
                "week": week,
                "graph_kind": kind,
                "target": target,
                "seed": spec.seed,
            }
            y = table.y(target)
            reason = _classes_ok(y)
            if reason:
                row.update(n_rows=len(y), status="skipped", reason=reason, selected_features=[])
                report.rows.append(row)
                continue
            imp = rank_features(table, target, spec.seed)
            row["importances"] = [f"{k}:{v:.6f}" for k, v in sorted(imp.items(), key=lambda kv: (-kv[1], kv[0]))]
            try:
                chosen = select_features(imp, spec.importance_threshold)
            except DataError as exc:
                row.update(n_rows=len(y), status="skipped", reason=str(exc), selected_features=[])
                report.rows.append(row)
                continue
            row["selected_features"] = chosen
            row.update(_evaluate(table.columns(chosen), y, spec))
            report.rows.append(row)
    return _write(report, spec)


def run_survival(spec: ExperimentSpec, courses: Sequence[CourseData] | None = None) -> Report:
    """Both Cox models side by side; constant covariates are left out and flagged."""
    (course,) = _courses(spec, courses, 1)
    kind = spec.graph_kinds[0]
    W = course.config.num_weeks
    table = assemble_weekly(course, week=W, graph_kind=kind)
    all_features = list(model_covariates("no_grade", course.config.platform_profile))
    cols = ["course_id", "graph_kind", "seed", "feature", "mean", "sd"]
    for m in SURVIVAL_MODELS:
        cols += [f"{m}_hr", f"{m}_se", f"{m}_p", f"{m}_stars", f"{m}_status"]
    report = Report("survival", cols)
    rows = {
        f: {"course_id": course.config.course_id, "graph_kind": kind, "seed": spec.seed, "feature": f}
        for f in all_features
    }
    X = table.columns(all_features)
    for f, col in zip(all_features, X.T):
        if len(col) > 1:
            rows[f].update(mean=float(col.mean()), sd=float(col.std(ddof=1)))
    for m in SURVIVAL_MODELS:
        names = list(model_covariates(m, course.config.platform_profile))
        constant = [f for f in names if len(table) < 2 or not np.ptp(table.columns([f])) > 0]
        for f in names:
            rows[f][f"{m}_status"] = "zero variance" if f in constant else ""
        for f in all_features:
            if f not in names:
                rows[f][f"{m}_status"] = "not included"
        usable = [f for f in names if f not in constant]
        if not usable:
            continue
        try:
            fit, hz = fit_model(course, usable, kind)
        except (NumericError, DataError) as exc:
            for f in usable:
                rows[f][f"{m}_status"] = f"failed: {exc}"
            continue
        if spec.out_dir is not None:
            Path(spec.out_dir).mkdir(parents=True, exist_ok=True)
            write_hazard_csv(hz, Path(spec.out_dir) / f"survival_{m}.csv")
        for r in hz:
            rows[r.feature].update(
                {f"{m}_hr": r.hr, f"{m}_se": r.se, f"{m}_p": r.p, f"{m}_stars": r.stars,
                 f"{m}_status": "ok" if fit.converged else "not converged"}
            )
    report.rows = [rows[f] for f in all_features]
    return _write(report, spec)


def run_cross_course(spec: ExperimentSpec, courses: Sequence[CourseData] | None = None) -> Report:
    """Train on the first course, test on the second, for each week and static target.

    The within-course nested-CV score on the test course is reported
    alongside for comparison.
    """
    a, b = _courses(spec, courses, 2)
    if a.config.num_weeks != b.config.num_weeks:
        raise UsageError("cross-course experiments need courses of equal length")
    if spec.feature_whitelist:
        whitelist = list(spec.feature_whitelist)
    else:
        fb = set(behavioral_features(b.config.platform_profile))
        whitelist = [f for f in behavioral_features(a.config.platform_profile) if f in fb]
    if not whitelist:
        raise SchemaError("the two courses share no behavioural features")
    for c in (a, b):
        missing = [f for f in whitelist if f not in feature_names(c.config.platform_profile)]
        if missing:
            raise SchemaError(f"course {c.config.course_id!r} lacks whitelisted features: {', '.join(missing)}")
    kind = spec.graph_kinds[0]
    targets = [t for t in STATIC_TARGETS if t in spec.targets] or list(STATIC_TARGETS)
    report = Report(
        "cross_course",
        ["train_course", "test_course", "week", "graph_kind", "target", "seed", "selected_features",
         "n_train", "n_test", "f_measure", "auc", "chosen_C", "within_f_measure", "within_auc",
         "status", "reason"],
    )
    for week in _weeks(spec, a):
        ta = assemble_weekly(a, week=week, graph_kind=kind)
        tb = assemble_weekly(b, week=week, graph_kind=kind)
        for target in targets:
            row = {
                "train_course": a.config.course_id,
                "test_course": b.config.course_id,
                "week": week,
                "graph_kind": kind,
                "target": target,
                "seed": spec.seed,
                "selected_features": whitelist,
                "n_train": len(ta),
                "n_test": len(tb),
            }
            reason = _classes_ok(ta.y(target)) or _classes_ok(tb.y(target))
            if reason:
                row.update(status="skipped", reason=reason)
                report.rows.append(row)
                continue
            try:
                rep = cross_course_eval(ta, tb, whitelist, spec.model_kind, target, spec.C_grid, spec.seed)
            except DataError as exc:
                row.update(status="skipped", reason=str(exc))
                report.rows.append(row)
                continue
            within = _evaluate(tb.columns(whitelist), tb.y(target), spec)
            row.update(
                f_measure=rep.f_measure,
                auc=rep.auc,
                chosen_C=rep.chosen_C_mode,
                within_f_measure=within.get("f_measure", ""),
                within_auc=within.get("auc", ""),
                status="ok",
                reason="",
            )
            report.rows.append(row)
    return _write(report, spec)
