"""Course event logs, forum dumps and outcome records.

Three files describe a course run: a JSON Lines event log, a JSON Lines
forum dump and an outcomes CSV.  A small ``key=value`` config file carries
the course calendar.  :func:`load_course` parses and cross-checks them into
an immutable :class:`CourseData`; :func:`save_course` writes the same
formats back out.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import IntegrityError, OutOfWindowError, ParseError

SECONDS_PER_WEEK = 7 * 24 * 3600

EVENT_TYPES = (
    "video_view",
    "video_download",
    "chapter_view",
    "submission",
    "post",
    "comment",
    "vote_cast",
)
FORUM_EVENT_TYPES = frozenset({"post", "comment", "vote_cast"})
PLATFORM_PROFILES = ("coursera_like", "edx_like")


@dataclass(frozen=True)
class EventRecord:
    """One learner action.

    ``timestamp`` may only be ``None`` for ``vote_cast`` rows: some forum
    dumps keep votes without recording when they were cast.
    """

    student_id: str
    event_type: str
    timestamp: float | None
    thread_id: str | None = None
    post_id: str | None = None
    vote_value: int | None = None

    def __post_init__(self) -> None:
        if self.event_type not in EVENT_TYPES:
            raise ValueError(f"unknown event_type {self.event_type!r}")
        if self.timestamp is None:
            if self.event_type != "vote_cast":
                raise ValueError("only vote_cast events may omit the timestamp")
        elif not math.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")
        is_forum = self.event_type in FORUM_EVENT_TYPES
        if is_forum != (self.thread_id is not None):
            raise ValueError("thread_id is required for forum events and only for them")
        if (self.event_type == "vote_cast") != (self.vote_value is not None):
            raise ValueError("vote_value is required for vote_cast events and only for them")
        if self.vote_value is not None and self.vote_value not in (-1, 1):
            raise ValueError("vote_value must be -1 or +1")
        if self.post_id is not None and not is_forum:
            raise ValueError("post_id is only meaningful for forum events")

    @property
    def timed(self) -> bool:
        return self.timestamp is not None


@dataclass(frozen=True)
class CourseConfig:
    course_id: str
    platform_profile: str
    start_time: float
    num_weeks: int = 6
    staff_ids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.platform_profile not in PLATFORM_PROFILES:
            raise ValueError(f"unknown platform_profile {self.platform_profile!r}")
        if int(self.num_weeks) != self.num_weeks or self.num_weeks < 2:
            raise ValueError("num_weeks must be an integer >= 2")
        object.__setattr__(self, "staff_ids", frozenset(self.staff_ids))

    @property
    def end_time(self) -> float:
        """First second after the course window."""
        return self.start_time + self.num_weeks * SECONDS_PER_WEEK

    def in_window(self, timestamp: float) -> bool:
        return self.start_time <= timestamp < self.end_time

    def week_end(self, week: int) -> float:
        """First second after ``week``."""
        return self.start_time + week * SECONDS_PER_WEEK


@dataclass(frozen=True)
class StudentOutcome:
    student_id: str
    final_grade: float | None
    certificate: bool

    def __post_init__(self) -> None:
        if self.final_grade is not None and not 0.0 <= self.final_grade <= 1.0:
            raise ValueError("final_grade must lie in [0, 1]")
        if self.certificate and not (self.final_grade or 0.0) > 0.0:
            raise ValueError("a certificate requires a positive final_grade")


@dataclass(frozen=True)
class ForumPost:
    post_id: str
    thread_id: str
    author_id: str
    timestamp: float
    parent_post_id: str | None = None
    upvotes: int = 0
    downvotes: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")
        if self.upvotes < 0 or self.downvotes < 0:
            raise ValueError("vote counters must be non-negative")


@dataclass(frozen=True)
class Thread:
    """A discussion thread; ``posts`` is its contribution sequence."""

    thread_id: str
    posts: tuple[ForumPost, ...]

    @property
    def root(self) -> ForumPost:
        return next(p for p in self.posts if p.parent_post_id is None)

    def __len__(self) -> int:
        return len(self.posts)


@dataclass(frozen=True)
class CourseData:
    config: CourseConfig
    events: tuple[EventRecord, ...] = ()
    threads: Mapping[str, Thread] = field(default_factory=dict)
    outcomes: Mapping[str, StudentOutcome] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "threads", MappingProxyType(dict(self.threads)))
        object.__setattr__(self, "outcomes", MappingProxyType(dict(self.outcomes)))

    @property
    def posts(self) -> dict[str, ForumPost]:
        return {p.post_id: p for t in self.threads.values() for p in t.posts}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CourseData):
            return NotImplemented
        return (
            self.config == other.config
            and self.events == other.events
            and dict(self.threads) == dict(other.threads)
            and dict(self.outcomes) == dict(other.outcomes)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class CoursePaths:
    config: Path
    events: Path
    forum: Path
    outcomes: Path

    @classmethod
    def in_directory(cls, directory: str | Path) -> "CoursePaths":
        d = Path(directory)
        return cls(d / "config.txt", d / "events.jsonl", d / "forum.jsonl", d / "outcomes.csv")


@dataclass(frozen=True)
class SummaryReport:
    enrolled: int = 0
    forum_active: int = 0
    with_submissions: int = 0
    forum_posts: int = 0
    with_activity: int = 0
    nonzero_grades: int = 0
    certificates: int = 0
    thread_count: int = 0
    thread_avg_length: float = 0.0
    thread_max_length: int = 0
    thread_min_length: int = 0


# ---------------------------------------------------------------------------
# calendar


def week_of(timestamp: float, config: CourseConfig) -> int:
    """Course week (1-based) that contains ``timestamp``."""
    if not config.in_window(timestamp):
        raise OutOfWindowError(
            f"timestamp {timestamp} outside course window "
            f"[{config.start_time}, {config.end_time})"
        )
    return 1 + int((timestamp - config.start_time) // SECONDS_PER_WEEK)


def _event_sort_key(e: EventRecord):
    return (
        e.timestamp is None,
        e.timestamp if e.timestamp is not None else 0.0,
        e.student_id,
        EVENT_TYPES.index(e.event_type),
        e.post_id or "",
        e.thread_id or "",
        e.vote_value or 0,
    )


def sort_events(events: Iterable[EventRecord]) -> tuple[EventRecord, ...]:
    """Timestamp order; untimestamped votes go last.  Ties break on the record fields."""
    return tuple(sorted(events, key=_event_sort_key))


# ---------------------------------------------------------------------------
# parsing


def parse_timestamp(text: str) -> float:
    """ISO-8601 to UTC seconds.  Naive times are taken as UTC."""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_timestamp(seconds: float) -> str:
    return datetime.fromtimestamp(seconds, tz=timezone.utc).isoformat().replace("+00:00", "Z")


def load_config(path: str | Path) -> CourseConfig:
    values: dict[str, str] = {}
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(path, lineno, "expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key] = value
    missing = {"course_id", "platform_profile", "start_time", "num_weeks"} - values.keys()
    if missing:
        raise ParseError(path, 0, f"missing keys: {', '.join(sorted(missing))}")
    try:
        staff = frozenset(s.strip() for s in values.get("staff_ids", "").split(",") if s.strip())
        return CourseConfig(
            course_id=values["course_id"],
            platform_profile=values["platform_profile"],
            start_time=parse_timestamp(values["start_time"]),
            num_weeks=int(values["num_weeks"]),
            staff_ids=staff,
        )
    except ValueError as exc:
        raise ParseError(path, 0, str(exc)) from exc


def save_config(config: CourseConfig, path: str | Path) -> None:
    lines = [
        f"course_id={config.course_id}",
        f"platform_profile={config.platform_profile}",
        f"start_time={format_timestamp(config.start_time)}",
        f"num_weeks={config.num_weeks}",
        f"staff_ids={','.join(sorted(config.staff_ids))}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _iter_json_lines(path: Path):
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ParseError(path, lineno, "expected a JSON object")
            yield lineno, obj


def _opt_str(obj: dict, key: str) -> str | None:
    v = obj.get(key)
    return None if v is None else str(v)


def _number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{what} must be a number")
    return value


def read_events(path: str | Path) -> list[EventRecord]:
    path = Path(path)
    events = []
    for lineno, obj in _iter_json_lines(path):
        try:
            ts = obj.get("timestamp")
            events.append(
                EventRecord(
                    student_id=str(obj["student_id"]),
                    event_type=str(obj["event_type"]),
                    timestamp=None if ts is None else _number(ts, "timestamp"),
                    thread_id=_opt_str(obj, "thread_id"),
                    post_id=_opt_str(obj, "post_id"),
                    vote_value=None if obj.get("vote_value") is None else int(obj["vote_value"]),
                )
            )
        except KeyError as exc:
            raise ParseError(path, lineno, f"missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ParseError(path, lineno, str(exc)) from exc
    return events


def read_forum(path: str | Path) -> list[ForumPost]:
    path = Path(path)
    posts = []
    seen: set[str] = set()
    for lineno, obj in _iter_json_lines(path):
        try:
            post = ForumPost(
                post_id=str(obj["post_id"]),
                thread_id=str(obj["thread_id"]),
                author_id=str(obj["author_id"]),
                timestamp=_number(obj["timestamp"], "timestamp"),
                parent_post_id=_opt_str(obj, "parent_post_id"),
                upvotes=int(obj.get("upvotes", 0)),
                downvotes=int(obj.get("downvotes", 0)),
            )
        except KeyError as exc:
            raise ParseError(path, lineno, f"missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ParseError(path, lineno, str(exc)) from exc
        if post.post_id in seen:
            raise IntegrityError(f"{path}:{lineno}: duplicate post_id {post.post_id!r}")
        seen.add(post.post_id)
        posts.append(post)
    return posts


_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f", ""}


def read_outcomes(path: str | Path) -> dict[str, StudentOutcome]:
    path = Path(path)
    out: dict[str, StudentOutcome] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return out
        need = {"student_id", "final_grade", "certificate"}
        if not need <= set(reader.fieldnames):
            raise ParseError(path, 1, "header must be student_id,final_grade,certificate")
        for row in reader:
            lineno = reader.line_num
            try:
                grade_text = (row["final_grade"] or "").strip()
                cert_text = (row["certificate"] or "").strip().lower()
                if cert_text not in _TRUE | _FALSE:
                    raise ValueError(f"bad certificate flag {row['certificate']!r}")
                rec = StudentOutcome(
                    student_id=row["student_id"],
                    final_grade=float(grade_text) if grade_text else None,
                    certificate=cert_text in _TRUE,
                )
            except (TypeError, ValueError) as exc:
                raise ParseError(path, lineno, str(exc)) from exc
            if rec.student_id in out:
                raise IntegrityError(f"{path}:{lineno}: duplicate student_id {rec.student_id!r}")
            out[rec.student_id] = rec
    return out


# ---------------------------------------------------------------------------
# assembly


def contribution_order(posts: Iterable[ForumPost]) -> tuple[ForumPost, ...]:
    return tuple(sorted(posts, key=lambda p: (p.timestamp, p.post_id)))


def assemble_threads(posts: Iterable[ForumPost]) -> dict[str, Thread]:
    """Group posts into threads and check the reply structure."""
    by_id: dict[str, ForumPost] = {}
    for p in posts:
        if p.post_id in by_id:
            raise IntegrityError(f"duplicate post_id {p.post_id!r}")
        by_id[p.post_id] = p

    grouped: dict[str, list[ForumPost]] = {}
    for p in by_id.values():
        if p.parent_post_id is not None:
            parent = by_id.get(p.parent_post_id)
            if parent is None:
                raise IntegrityError(
                    f"post {p.post_id!r} replies to unknown post {p.parent_post_id!r}"
                )
            if parent.thread_id != p.thread_id:
                raise IntegrityError(f"post {p.post_id!r} replies across threads")
            if p.timestamp < parent.timestamp:
                raise IntegrityError(f"post {p.post_id!r} predates its parent")
        grouped.setdefault(p.thread_id, []).append(p)

    threads = {}
    for tid in sorted(grouped):
        roots = [p for p in grouped[tid] if p.parent_post_id is None]
        if len(roots) != 1:
            raise IntegrityError(f"thread {tid!r} has {len(roots)} root posts")
        threads[tid] = Thread(tid, contribution_order(grouped[tid]))
    return threads


def _check_events(events: Iterable[EventRecord], threads: Mapping[str, Thread]) -> None:
    posts = {p.post_id: p for t in threads.values() for p in t.posts}
    for e in events:
        if e.thread_id is None:
            continue
        if e.thread_id not in threads:
            raise IntegrityError(f"event by {e.student_id!r} references unknown thread {e.thread_id!r}")
        if e.post_id is None:
            continue
        post = posts.get(e.post_id)
        if post is None:
            raise IntegrityError(f"event by {e.student_id!r} references unknown post {e.post_id!r}")
        if post.thread_id != e.thread_id:
            raise IntegrityError(f"event post {e.post_id!r} is not in thread {e.thread_id!r}")
        if e.event_type in ("post", "comment") and post.author_id != e.student_id:
            raise IntegrityError(f"post {e.post_id!r} is not authored by {e.student_id!r}")


def build_course(
    config: CourseConfig,
    events: Iterable[EventRecord] = (),
    posts: Iterable[ForumPost] = (),
    outcomes: Mapping[str, StudentOutcome] | Iterable[StudentOutcome] = (),
) -> CourseData:
    """Validate in-memory records and assemble a :class:`CourseData`."""
    threads = assemble_threads(posts)
    events = sort_events(events)
    _check_events(events, threads)
    if not isinstance(outcomes, Mapping):
        outcome_map: dict[str, StudentOutcome] = {}
        for o in outcomes:
            if o.student_id in outcome_map:
                raise IntegrityError(f"duplicate outcome for {o.student_id!r}")
            outcome_map[o.student_id] = o
        outcomes = outcome_map
    return CourseData(config, events, threads, dict(sorted(outcomes.items())))


def load_course(
    events_path: str | Path,
    forum_path: str | Path,
    outcomes_path: str | Path,
    config: CourseConfig | str | Path,
) -> CourseData:
    if not isinstance(config, CourseConfig):
        config = load_config(config)
    return build_course(
        config,
        read_events(events_path),
        read_forum(forum_path),
        read_outcomes(outcomes_path),
    )


def load_course_dir(directory: str | Path) -> CourseData:
    p = CoursePaths.in_directory(directory)
    return load_course(p.events, p.forum, p.outcomes, p.config)


def _num(x: float):
    return int(x) if float(x).is_integer() else x


def save_course(course: CourseData, directory: str | Path) -> CoursePaths:
    paths = CoursePaths.in_directory(directory)
    paths.config.parent.mkdir(parents=True, exist_ok=True)
    save_config(course.config, paths.config)
    with paths.events.open("w", encoding="utf-8") as fh:
        for e in course.events:
            row = {
                "student_id": e.student_id,
                "event_type": e.event_type,
                "timestamp": None if e.timestamp is None else _num(e.timestamp),
            }
            for key in ("thread_id", "post_id", "vote_value"):
                if getattr(e, key) is not None:
                    row[key] = getattr(e, key)
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    with paths.forum.open("w", encoding="utf-8") as fh:
        for thread in course.threads.values():
            for p in thread.posts:
                row = {
                    "post_id": p.post_id,
                    "thread_id": p.thread_id,
                    "author_id": p.author_id,
                    "timestamp": _num(p.timestamp),
                    "parent_post_id": p.parent_post_id,
                    "upvotes": p.upvotes,
                    "downvotes": p.downvotes,
                }
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    with paths.outcomes.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["student_id", "final_grade", "certificate"])
        for o in course.outcomes.values():
            grade = "" if o.final_grade is None else repr(float(o.final_grade))
            writer.writerow([o.student_id, grade, int(o.certificate)])
    return paths


# ---------------------------------------------------------------------------
# cohort operations


def _reparent(thread: Thread, removed: set[str]) -> Thread | None:
    """Drop ``removed`` posts from a thread, attaching orphans to their nearest kept ancestor.

    If the root itself goes, the earliest surviving post becomes the new root
    and every post left without a kept ancestor hangs off it.
    """
    by_id = {p.post_id: p for p in thread.posts}
    kept = [p for p in thread.posts if p.post_id not in removed]
    if not kept:
        return None

    def ancestor(p: ForumPost) -> str | None:
        pid = p.parent_post_id
        while pid is not None and pid in removed:
            pid = by_id[pid].parent_post_id
        return pid

    new_root = kept[0] if thread.root.post_id in removed else None
    posts = []
    for p in kept:
        if new_root is not None and p.post_id == new_root.post_id:
            posts.append(replace(p, parent_post_id=None))
            continue
        parent = ancestor(p)
        if parent is None and new_root is not None:
            parent = new_root.post_id
        posts.append(p if parent == p.parent_post_id else replace(p, parent_post_id=parent))
    return Thread(thread.thread_id, contribution_order(posts))


def filter_on_schedule(course: CourseData, config: CourseConfig | None = None) -> tuple[CourseData, set[str]]:
    """Remove every student who was active outside the course window.

    Timestamped events and authored forum posts both count as activity.  An
    excluded student loses all events, posts and their outcome row.
    """
    config = config or course.config
    excluded = {e.student_id for e in course.events if e.timed and not config.in_window(e.timestamp)}
    excluded |= {
        p.author_id
        for t in course.threads.values()
        for p in t.posts
        if not config.in_window(p.timestamp)
    }
    if not excluded:
        return replace(course, config=config), set()

    removed_posts = {
        p.post_id for t in course.threads.values() for p in t.posts if p.author_id in excluded
    }
    threads = {}
    for tid, t in course.threads.items():
        nt = _reparent(t, removed_posts) if removed_posts else t
        if nt is not None:
            threads[tid] = nt
    events = [
        e
        for e in course.events
        if e.student_id not in excluded
        and not (e.post_id is not None and e.post_id in removed_posts)
        and not (e.thread_id is not None and e.thread_id not in threads)
    ]
    outcomes = {k: v for k, v in course.outcomes.items() if k not in excluded}
    return CourseData(config, events, threads, outcomes), excluded


def active_students(course: CourseData) -> set[str]:
    """Students with at least one timestamped event."""
    return {e.student_id for e in course.events if e.timed}


def dataset_summary(course: CourseData) -> SummaryReport:
    lengths = [len(t) for t in course.threads.values()]
    grades = [o.final_grade or 0.0 for o in course.outcomes.values()]
    return SummaryReport(
        enrolled=len(course.outcomes),
        forum_active=len({p.author_id for t in course.threads.values() for p in t.posts}),
        with_submissions=len({e.student_id for e in course.events if e.event_type == "submission"}),
        forum_posts=sum(lengths),
        with_activity=len(active_students(course)),
        nonzero_grades=sum(g > 0 for g in grades),
        certificates=sum(o.certificate for o in course.outcomes.values()),
        thread_count=len(lengths),
        thread_avg_length=sum(lengths) / len(lengths) if lengths else 0.0,
        thread_max_length=max(lengths, default=0),
        thread_min_length=min(lengths, default=0),
    )
