import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mooc_attrition.ingest import (  # noqa: E402
    SECONDS_PER_WEEK,
    CourseConfig,
    EventRecord,
    ForumPost,
    StudentOutcome,
    build_course,
)

START = 1_382_572_800.0  # 2013-10-24T00:00:00Z
DAY = 24 * 3600


def at(week: int, day: float = 0.0) -> float:
    """Timestamp ``day`` days into ``week``."""
    return START + (week - 1) * SECONDS_PER_WEEK + day * DAY


@pytest.fixture
def config():
    return CourseConfig("test-course", "coursera_like", START, 6, frozenset({"prof"}))


@pytest.fixture
def edx_config():
    return CourseConfig("test-edx", "edx_like", START, 6, frozenset())


def thread_of(tid, authors, week=1, parent="root", start_day=0.0):
    """Posts by ``authors`` in order; replies hang off the root or the previous post."""
    posts = []
    for i, a in enumerate(authors):
        pid = f"{tid}-{i:03d}"
        if i == 0:
            par = None
        elif parent == "root":
            par = f"{tid}-000"
        else:
            par = posts[-1].post_id
        posts.append(ForumPost(pid, tid, a, at(week, start_day + 0.1 * i), par))
    return posts


def post_events(posts):
    return [
        EventRecord(p.author_id, "post" if p.parent_post_id is None else "comment", p.timestamp, p.thread_id, p.post_id)
        for p in posts
    ]


@pytest.fixture
def small_course(config):
    """Four students, two threads, one staff reply."""
    posts = thread_of("t1", ["A", "B", "C"], week=1) + thread_of("t2", ["B", "prof", "A", "D"], week=2)
    events = post_events(posts) + [
        EventRecord("A", "video_view", at(1, 1)),
        EventRecord("A", "video_download", at(1, 2)),
        EventRecord("A", "submission", at(3, 1)),
        EventRecord("B", "video_view", at(5, 1)),
        EventRecord("C", "video_view", at(1, 3)),
        EventRecord("E", "video_view", at(6, 2)),
        EventRecord("C", "vote_cast", at(1, 4), "t1", "t1-000", 1),
        EventRecord("D", "vote_cast", at(2, 5), "t1", "t1-000", -1),
    ]
    outcomes = [
        StudentOutcome("A", 0.9, True),
        StudentOutcome("B", 0.2, False),
        StudentOutcome("C", None, False),
        StudentOutcome("D", 0.0, False),
        StudentOutcome("E", None, False),
        StudentOutcome("F", None, False),
    ]
    return build_course(config, events, posts, outcomes)


# one PASS/FAIL line per acceptance criterion, repeated at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
