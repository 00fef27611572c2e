"""Weekly cumulative feature tables and target labels."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import SchemaError, UsageError
from .forum_graph import InteractionGraph, build_graph
from .graph_metrics import SOCIAL_FEATURES, social_features
from .ingest import CourseConfig, CourseData, SECONDS_PER_WEEK, StudentOutcome

FORUM_FEATURES = ("total_posts", "total_comments", "votes")
LABELS = ("semester_dropout", "week_dropout", "inactive_next_week", "certificate")

_BEHAVIORAL = {
    "coursera_like": ("video_view", "video_download", "total_attempts"),
    "edx_like": ("video_view", "chapter_view", "total_attempts"),
}
_COUNTED = {
    "video_view": "video_view",
    "video_download": "video_download",
    "chapter_view": "chapter_view",
    "submission": "total_attempts",
    "post": "total_posts",
    "comment": "total_comments",
}


def behavioral_features(profile: str) -> tuple[str, ...]:
    return _BEHAVIORAL[profile]


def feature_names(profile: str) -> tuple[str, ...]:
    return _BEHAVIORAL[profile] + FORUM_FEATURES + SOCIAL_FEATURES


@dataclass(frozen=True)
class LabelSet:
    semester_dropout: bool
    week_dropout: bool
    inactive_next_week: bool
    certificate: bool


@dataclass
class WeeklyFeatureTable:
    """Rows are students sorted by id; ``X[i, j]`` is feature ``feature_names[j]`` of ``students[i]``."""

    course_id: str
    week: int
    graph_kind: str
    students: tuple[str, ...]
    feature_names: tuple[str, ...]
    X: np.ndarray
    labels: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.students)

    @property
    def rows(self) -> dict[str, np.ndarray]:
        return {s: self.X[i] for i, s in enumerate(self.students)}

    def row(self, student: str) -> dict[str, float]:
        i = self.students.index(student)
        return dict(zip(self.feature_names, self.X[i].tolist()))

    def label_set(self, student: str) -> LabelSet:
        i = self.students.index(student)
        return LabelSet(**{k: bool(self.labels[k][i]) for k in LABELS})

    def columns(self, names) -> np.ndarray:
        missing = [n for n in names if n not in self.feature_names]
        if missing:
            raise SchemaError(f"features not in table: {', '.join(missing)}")
        idx = [self.feature_names.index(n) for n in names]
        return self.X[:, idx]

    def y(self, label: str) -> np.ndarray:
        if label not in self.labels:
            raise UsageError(f"unknown label {label!r}; expected one of {LABELS}")
        return self.labels[label].astype(int)

    def subset(self, students) -> "WeeklyFeatureTable":
        keep = set(students)
        idx = [i for i, s in enumerate(self.students) if s in keep]
        return WeeklyFeatureTable(
            self.course_id,
            self.week,
            self.graph_kind,
            tuple(self.students[i] for i in idx),
            self.feature_names,
            self.X[idx],
            {k: v[idx] for k, v in self.labels.items()},
        )

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["student_id", *self.feature_names, *LABELS])
            for i, s in enumerate(self.students):
                w.writerow(
                    [s, *(f"{v:.6f}" for v in self.X[i]), *(int(self.labels[k][i]) for k in LABELS)]
                )


def _check_week(week: int, config: CourseConfig) -> None:
    if not 1 <= week <= config.num_weeks:
        raise UsageError(f"week must be in 1..{config.num_weeks}, got {week}")


def _week_index(ts: float, config: CourseConfig) -> int:
    return 1 + int((ts - config.start_time) // SECONDS_PER_WEEK)


def activity_weeks(course: CourseData) -> dict[str, set[int]]:
    """Weeks in which each student has at least one timestamped event."""
    cfg = course.config
    weeks: dict[str, set[int]] = defaultdict(set)
    for e in course.events:
        if e.timed and cfg.in_window(e.timestamp):
            weeks[e.student_id].add(_week_index(e.timestamp, cfg))
    return dict(weeks)


def last_active_week(course: CourseData) -> dict[str, int]:
    return {s: max(w) for s, w in sorted(activity_weeks(course).items())}


def received_votes(course: CourseData, week: int) -> dict[str, int]:
    """Net votes each author has received on posts made by the end of ``week``.

    A post that has ``vote_cast`` events is scored from those events; timed
    votes count from the week they were cast, untimed ones from the post's
    week.  Posts without vote events fall back to their up/down counters.
    """
    cfg = course.config
    horizon = cfg.week_end(week)
    posts = course.posts
    by_post: dict[str, list] = defaultdict(list)
    for e in course.events:
        if e.event_type == "vote_cast" and e.post_id is not None:
            by_post[e.post_id].append(e)
    totals: dict[str, int] = defaultdict(int)
    for pid, p in posts.items():
        if not p.timestamp < horizon:
            continue
        if pid in by_post:
            totals[p.author_id] += sum(
                e.vote_value for e in by_post[pid] if e.timestamp is None or e.timestamp < horizon
            )
        else:
            totals[p.author_id] += p.upvotes - p.downvotes
    return dict(totals)


def behavioral_forum_features(course: CourseData, week: int, config: CourseConfig | None = None) -> dict[str, dict[str, float]]:
    """Cumulative per-student counts up to the end of ``week``.

    Only students with at least one event by then appear.  Keys are the
    profile's behavioural features plus the forum features.
    """
    config = config or course.config
    _check_week(week, config)
    names = behavioral_features(config.platform_profile) + FORUM_FEATURES
    horizon = config.week_end(week)
    out: dict[str, dict[str, float]] = {}
    for e in course.events:
        if not e.timed or not config.start_time <= e.timestamp < horizon:
            continue
        row = out.setdefault(e.student_id, dict.fromkeys(names, 0.0))
        col = _COUNTED.get(e.event_type)
        if col in row:
            row[col] += 1
    for student, v in received_votes(course, week).items():
        if student in out:
            out[student]["votes"] = float(v)
    return dict(sorted(out.items()))


def compute_labels(
    course: CourseData,
    outcomes: Mapping[str, StudentOutcome] | None = None,
    config: CourseConfig | None = None,
    week: int = 1,
) -> dict[str, LabelSet]:
    """Labels for every student with recorded activity.

    With ``L`` the last active week and ``W`` the course length: semester
    dropout is ``L <= W - 2`` (no activity in the final week alone is not a
    dropout); week dropout is ``L <= week``; inactive-next-week is false at
    ``week == W``.
    """
    config = config or course.config
    outcomes = course.outcomes if outcomes is None else outcomes
    _check_week(week, config)
    W = config.num_weeks
    labels = {}
    for s, weeks in sorted(activity_weeks(course).items()):
        last = max(weeks)
        o = outcomes.get(s)
        labels[s] = LabelSet(
            semester_dropout=last <= W - 2,
            week_dropout=last <= week,
            inactive_next_week=week < W and (week + 1) not in weeks,
            certificate=bool(o and o.certificate),
        )
    return labels


def assemble_weekly(
    course: CourseData,
    outcomes: Mapping[str, StudentOutcome] | None = None,
    config: CourseConfig | None = None,
    week: int = 1,
    graph_kind: str = "type1",
    graph: InteractionGraph | None = None,
) -> WeeklyFeatureTable:
    """Join counts, social metrics and labels into one table.

    Rows are non-staff students with activity by the end of ``week``;
    students off the graph get zero social features.
    """
    config = config or course.config
    _check_week(week, config)
    counts = behavioral_forum_features(course, week, config)
    labels = compute_labels(course, outcomes, config, week)
    if graph is None:
        graph = build_graph(course.threads, graph_kind, week, config)
    last = last_active_week(course)
    # forum dumps can hold authors who never show up in the event log
    for p in course.posts.values():
        if p.author_id in graph.nodes and p.author_id not in last:
            last[p.author_id] = max(
                (_week_index(q.timestamp, config) for q in course.posts.values() if q.author_id == p.author_id),
            )
    social = social_features(graph, last, week)

    names = feature_names(config.platform_profile)
    students = tuple(s for s in counts if s not in config.staff_ids)
    X = np.zeros((len(students), len(names)))
    n_count = len(names) - len(SOCIAL_FEATURES)
    for i, s in enumerate(students):
        X[i, :n_count] = [counts[s][f] for f in names[:n_count]]
        if s in social:
            X[i, n_count:] = social[s].as_tuple()
    y = {k: np.array([getattr(labels[s], k) for s in students], dtype=bool) for k in LABELS}
    return WeeklyFeatureTable(config.course_id, week, graph.kind, students, names, X, y)
