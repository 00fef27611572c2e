"""Synthetic courses with known ground truth.

Each student gets a log-normal engagement level ``e``.  While active, weekly
activity counts are Poisson with rates proportional to ``e``.  At the end of
every week but the last the student quits with probability

    expit(intercept + engagement * log(e) + attempts * log1p(weekly submissions)
          + support * log1p(replies received on own threads so far))

Forum participants open threads and reply to them, chosen with weights
proportional to ``e * (1 + posts so far)`` so a few authors dominate.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .ingest import (
    SECONDS_PER_WEEK,
    CourseConfig,
    CourseData,
    EventRecord,
    ForumPost,
    StudentOutcome,
    build_course,
    parse_timestamp,
    save_course,
)

REPLY_MODES = ("root", "chain")


@dataclass(frozen=True)
class SynthConfig:
    n_students: int = 1000
    num_weeks: int = 6
    platform_profile: str = "coursera_like"
    course_id: str = "synthetic"
    start_time: float = parse_timestamp("2013-10-24T00:00:00Z")
    inactive_fraction: float = 0.2
    engagement_mean: float = 0.0
    engagement_sd: float = 0.8
    video_view_rate: float = 3.0
    video_download_rate: float = 1.5
    chapter_view_rate: float = 2.0
    submission_rate: float = 1.0
    hazard_intercept: float = -1.0
    hazard_engagement: float = -1.0
    hazard_attempts: float = -0.5
    hazard_support: float = 0.0
    forum_participation: float = 0.1
    threads_per_week: float = 5.0
    replies_per_thread: float = 2.0
    reply_mode: str = "chain"
    vote_rate: float = 0.5
    upvote_probability: float = 0.75
    n_staff: int = 1
    staff_reply_probability: float = 0.2
    certificate_threshold: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("inactive_fraction", "forum_participation", "upvote_probability", "staff_reply_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")
        for name in ("video_view_rate", "video_download_rate", "chapter_view_rate", "submission_rate",
                     "threads_per_week", "replies_per_thread", "vote_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.num_weeks < 2:
            raise ValueError("num_weeks must be at least 2")
        if self.n_students < 0 or self.n_staff < 0:
            raise ValueError("counts must be non-negative")
        if self.reply_mode not in REPLY_MODES:
            raise ValueError(f"reply_mode must be one of {REPLY_MODES}")
        if self.certificate_threshold < 1:
            raise ValueError("certificate_threshold must be positive")

    @property
    def theta(self) -> dict[str, float]:
        return {
            "intercept": self.hazard_intercept,
            "engagement": self.hazard_engagement,
            "attempts": self.hazard_attempts,
            "support": self.hazard_support,
        }

    def course_config(self, profile: str | None = None, course_id: str | None = None) -> CourseConfig:
        return CourseConfig(
            course_id=course_id or self.course_id,
            platform_profile=profile or self.platform_profile,
            start_time=self.start_time,
            num_weeks=self.num_weeks,
            staff_ids=frozenset(f"staff{k}" for k in range(1, self.n_staff + 1)),
        )


@dataclass
class StudentTruth:
    engagement: float
    active: bool
    last_active_week: int | None
    dropout_week: int | None
    forum_participant: bool
    weekly_hazard: list[float] = field(default_factory=list)


@dataclass
class GroundTruth:
    theta: dict[str, float]
    students: dict[str, StudentTruth]

    def write_jsonl(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write(json.dumps({"kind": "params", "theta": self.theta}, sort_keys=True) + "\n")
            for sid, st in self.students.items():
                fh.write(json.dumps({"kind": "student", "student_id": sid, **asdict(st)}, sort_keys=True) + "\n")

    @classmethod
    def read_jsonl(cls, path: str | Path) -> "GroundTruth":
        theta: dict[str, float] = {}
        students = {}
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                obj = json.loads(line)
                if obj.pop("kind") == "params":
                    theta = obj["theta"]
                else:
                    sid = obj.pop("student_id")
                    students[sid] = StudentTruth(**obj)
        return cls(theta, students)


def _spread(rng: np.random.Generator, count: int, week: int, start: float) -> list[float]:
    base = start + (week - 1) * SECONDS_PER_WEEK
    return [float(base + s) for s in rng.integers(0, SECONDS_PER_WEEK, size=count)]


class _Forum:
    """Weekly thread generation shared by all participants."""

    def __init__(self, cfg: SynthConfig, staff: list[str], rng: np.random.Generator) -> None:
        self.cfg = cfg
        self.staff = staff
        self.rng = rng
        self.posts: list[ForumPost] = []
        self.events: list[EventRecord] = []
        self.post_count: dict[str, int] = {}
        self.support: dict[str, int] = {}
        self._thread_no = 0
        self._post_no = 0

    def _pick(self, people: list[str], weights: np.ndarray, exclude: str | None = None) -> str | None:
        w = weights.copy()
        if exclude is not None:
            w[[p == exclude for p in people]] = 0.0
        if w.sum() <= 0:
            return None
        return people[int(self.rng.choice(len(people), p=w / w.sum()))]

    def _new_post(self, thread: str, author: str, ts: float, parent: str | None) -> ForumPost:
        self._post_no += 1
        post = ForumPost(f"p{self._post_no:06d}", thread, author, ts, parent)
        self.posts.append(post)
        self.events.append(
            EventRecord(author, "post" if parent is None else "comment", ts, thread, post.post_id)
        )
        self.post_count[author] = self.post_count.get(author, 0) + 1
        return post

    def week(self, week: int, active: list[str], engagement: dict[str, float]) -> None:
        cfg, rng = self.cfg, self.rng
        if not active:
            return
        week_start = cfg.start_time + (week - 1) * SECONDS_PER_WEEK
        week_end = week_start + SECONDS_PER_WEEK
        for _ in range(int(rng.poisson(cfg.threads_per_week))):
            weights = np.array([engagement[a] * (1 + self.post_count.get(a, 0)) for a in active])
            origin = self._pick(active, weights)
            self._thread_no += 1
            tid = f"t{self._thread_no:05d}"
            n_replies = int(rng.poisson(cfg.replies_per_thread))
            offsets = np.sort(rng.integers(0, SECONDS_PER_WEEK, size=n_replies + 1))
            thread_posts = [self._new_post(tid, origin, float(week_start + offsets[0]), None)]
            staff_slot = (
                int(rng.integers(1, n_replies + 1))
                if self.staff and n_replies and rng.random() < cfg.staff_reply_probability
                else None
            )
            for r in range(1, n_replies + 1):
                if r == staff_slot:
                    author = self.staff[int(rng.integers(len(self.staff)))]
                else:
                    weights = np.array([engagement[a] * (1 + self.post_count.get(a, 0)) for a in active])
                    author = self._pick(active, weights)
                if cfg.reply_mode == "root":
                    parent = thread_posts[0]
                else:
                    parent = thread_posts[int(rng.integers(len(thread_posts)))]
                thread_posts.append(self._new_post(tid, author, float(week_start + offsets[r]), parent.post_id))
                if author != origin:
                    self.support[origin] = self.support.get(origin, 0) + 1
            for i, post in enumerate(thread_posts):
                up = down = 0
                for _ in range(int(rng.poisson(cfg.vote_rate))):
                    voter = self._pick(active, np.ones(len(active)), exclude=post.author_id)
                    if voter is None:
                        break
                    value = 1 if rng.random() < cfg.upvote_probability else -1
                    ts = float(rng.integers(int(post.timestamp), int(week_end)))
                    self.events.append(EventRecord(voter, "vote_cast", ts, tid, post.post_id, value))
                    up += value > 0
                    down += value < 0
                if up or down:
                    thread_posts[i] = ForumPost(
                        post.post_id, tid, post.author_id, post.timestamp, post.parent_post_id, up, down
                    )
            # counters are written back once the votes are known
            self.posts[-len(thread_posts):] = thread_posts


def generate_course(cfg: SynthConfig, profile: str | None = None, course_id: str | None = None,
                    seed: int | None = None) -> tuple[CourseData, dict[str, StudentOutcome], GroundTruth]:
    """Draw one course.  ``profile``/``course_id``/``seed`` override the config."""
    profile = profile or cfg.platform_profile
    config = cfg.course_config(profile, course_id)
    seed = cfg.seed if seed is None else seed
    W = cfg.num_weeks
    root = np.random.SeedSequence(seed)
    behaviour_ss, profile_ss, forum_ss = root.spawn(3)
    behaviour_seeds = behaviour_ss.spawn(cfg.n_students)
    profile_seeds = profile_ss.spawn(cfg.n_students)
    forum = _Forum(cfg, sorted(config.staff_ids), np.random.default_rng(forum_ss))

    ids = [f"s{i:05d}" for i in range(cfg.n_students)]
    truth: dict[str, StudentTruth] = {}
    rngs = {}
    for sid, bs, ps in zip(ids, behaviour_seeds, profile_seeds):
        b = np.random.default_rng(bs)
        e = float(np.exp(b.normal(cfg.engagement_mean, cfg.engagement_sd)))
        active = b.random() >= cfg.inactive_fraction
        forum_member = bool(b.random() < cfg.forum_participation)
        truth[sid] = StudentTruth(e, active, None, None, forum_member and active)
        rngs[sid] = (b, np.random.default_rng(ps))

    extra_col = "video_download" if profile == "coursera_like" else "chapter_view"
    extra_rate = cfg.video_download_rate if profile == "coursera_like" else cfg.chapter_view_rate
    events: list[EventRecord] = []
    attempts = dict.fromkeys(ids, 0)
    weekly_subs = dict.fromkeys(ids, 0)
    still_active = [s for s in ids if truth[s].active]
    for week in range(1, W + 1):
        for sid in still_active:
            b, pr = rngs[sid]
            st = truth[sid]
            views = int(b.poisson(cfg.video_view_rate * st.engagement))
            subs = int(b.poisson(cfg.submission_rate * st.engagement))
            if views + subs == 0:
                views = 1  # an active week always leaves a trace
            attempts[sid] += subs
            for ts in _spread(b, views, week, cfg.start_time):
                events.append(EventRecord(sid, "video_view", ts))
            for ts in _spread(b, subs, week, cfg.start_time):
                events.append(EventRecord(sid, "submission", ts))
            extra = int(pr.poisson(extra_rate * st.engagement))
            for ts in _spread(pr, extra, week, cfg.start_time):
                events.append(EventRecord(sid, extra_col, ts))
            st.last_active_week = week
            weekly_subs[sid] = subs
        forum.week(week, [s for s in still_active if truth[s].forum_participant],
                   {s: truth[s].engagement for s in still_active})
        if week == W:
            break
        survivors = []
        for sid in still_active:
            b, _ = rngs[sid]
            st = truth[sid]
            h = float(expit(
                cfg.hazard_intercept
                + cfg.hazard_engagement * np.log(st.engagement)
                + cfg.hazard_attempts * np.log1p(weekly_subs[sid])
                + cfg.hazard_support * np.log1p(forum.support.get(sid, 0))
            ))
            st.weekly_hazard.append(h)
            if b.random() < h:
                st.dropout_week = week + 1
            else:
                survivors.append(sid)
        still_active = survivors

    outcomes = {}
    for sid in ids:
        n = attempts[sid]
        grade = min(1.0, n / (1.25 * cfg.certificate_threshold)) if n else None
        outcomes[sid] = StudentOutcome(sid, grade, n >= cfg.certificate_threshold)

    course = build_course(config, events + forum.events, forum.posts, outcomes)
    return course, dict(course.outcomes), GroundTruth(cfg.theta, truth)


def twin_courses(
    cfg: SynthConfig,
    profile_a: str = "coursera_like",
    profile_b: str = "edx_like",
    same_seed: bool = False,
) -> tuple[CourseData, CourseData]:
    """Two offerings from identical behavioural parameters on different platforms.

    Independent sub-seeds are derived from ``cfg.seed`` unless ``same_seed``
    forces both to it, in which case the behavioural streams coincide.
    """
    if same_seed:
        seed_a = seed_b = cfg.seed
    else:
        seed_a, seed_b = (int(s.generate_state(1)[0]) for s in np.random.SeedSequence(cfg.seed).spawn(2))
    a, _, _ = generate_course(cfg, profile_a, f"{cfg.course_id}_a", seed_a)
    b, _, _ = generate_course(cfg, profile_b, f"{cfg.course_id}_b", seed_b)
    return a, b


def write_synthetic(course: CourseData, truth: GroundTruth, directory: str | Path) -> Path:
    directory = Path(directory)
    save_course(course, directory)
    path = directory / "ground_truth.jsonl"
    truth.write_jsonl(path)
    return path
