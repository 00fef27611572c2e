import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import START, at, post_events, thread_of
from mooc_attrition.errors import IntegrityError, OutOfWindowError, ParseError
from mooc_attrition.ingest import (
    SECONDS_PER_WEEK,
    CourseConfig,
    EventRecord,
    ForumPost,
    StudentOutcome,
    active_students,
    build_course,
    dataset_summary,
    filter_on_schedule,
    load_course_dir,
    read_events,
    read_forum,
    save_course,
    week_of,
)
from mooc_attrition.synth import SynthConfig, generate_course


def test_empty_course(config):
    c = build_course(config)
    assert len(c.events) == 0 and len(c.threads) == 0


def test_single_root_post(config):
    posts = thread_of("t", ["A"])
    c = build_course(config, post_events(posts), posts)
    assert len(c.threads) == 1
    assert len(c.threads["t"]) == 1
    assert c.threads["t"].root.post_id == "t-000"


def test_orphan_reply_is_integrity_error(config):
    posts = [ForumPost("p1", "t", "A", at(1)), ForumPost("p2", "t", "B", at(1, 1), "ghost")]
    with pytest.raises(IntegrityError):
        build_course(config, (), posts)


def test_cross_thread_reply_rejected(config):
    posts = [ForumPost("p1", "t1", "A", at(1)), ForumPost("p2", "t2", "B", at(1, 1), "p1")]
    with pytest.raises(IntegrityError):
        build_course(config, (), posts)


def test_event_author_mismatch_rejected(config):
    posts = thread_of("t", ["A"])
    with pytest.raises(IntegrityError):
        build_course(config, [EventRecord("B", "post", at(1), "t", "t-000")], posts)


def test_event_record_validation():
    with pytest.raises(ValueError):
        EventRecord("A", "video_view", None)
    with pytest.raises(ValueError):
        EventRecord("A", "teleport", at(1))
    with pytest.raises(ValueError):
        EventRecord("A", "vote_cast", at(1), "t", "p", 2)
    assert not EventRecord("A", "vote_cast", None, "t", "p", 1).timed


def test_outcome_validation():
    with pytest.raises(ValueError):
        StudentOutcome("A", 1.5, False)
    with pytest.raises(ValueError):
        StudentOutcome("A", 0.0, True)


@pytest.mark.parametrize(
    "offset, week",
    [(0, 1), (SECONDS_PER_WEEK - 1, 1), (SECONDS_PER_WEEK, 2), (6 * SECONDS_PER_WEEK - 1, 6)],
)
def test_week_of_boundaries(config, offset, week):
    assert week_of(START + offset, config) == week


@pytest.mark.parametrize("offset", [-1, 6 * SECONDS_PER_WEEK])
def test_week_of_outside_window(config, offset):
    with pytest.raises(OutOfWindowError):
        week_of(START + offset, config)


def test_filter_excludes_early_event(config):
    ev = [EventRecord("A", "video_view", START - 1), EventRecord("A", "video_view", at(2)),
          EventRecord("B", "video_view", at(1))]
    c = build_course(config, ev, (), [StudentOutcome("A", None, False), StudentOutcome("B", None, False)])
    kept, excluded = filter_on_schedule(c)
    assert excluded == {"A"}
    assert {e.student_id for e in kept.events} == {"B"}
    assert set(kept.outcomes) == {"B"}


def test_filter_identity_when_all_inside(small_course):
    kept, excluded = filter_on_schedule(small_course)
    assert excluded == set()
    assert kept == small_course


def test_filter_boundary_pair_matches_rescan(config):
    end = START + 6 * SECONDS_PER_WEEK
    ev = [EventRecord("A", "video_view", end - 1), EventRecord("B", "video_view", end)]
    c = build_course(config, ev)
    _, excluded = filter_on_schedule(c)
    rescan = {e.student_id for e in ev if not START <= e.timestamp < end}
    assert excluded == rescan == {"B"}


def test_filter_reparents_replies_to_removed_post(config):
    posts = [
        ForumPost("p1", "t", "A", at(1)),
        ForumPost("p2", "t", "X", at(1, 1), "p1"),
        ForumPost("p3", "t", "B", at(1, 2), "p2"),
    ]
    ev = post_events(posts) + [EventRecord("X", "video_view", START - 10)]
    kept, excluded = filter_on_schedule(build_course(config, ev, posts))
    assert excluded == {"X"}
    t = kept.threads["t"]
    assert [p.post_id for p in t.posts] == ["p1", "p3"]
    assert t.posts[1].parent_post_id == "p1"


def test_filter_promotes_new_root(config):
    posts = [ForumPost("p1", "t", "X", at(1)), ForumPost("p2", "t", "B", at(1, 1), "p1"),
             ForumPost("p3", "t", "C", at(1, 2), "p2")]
    ev = post_events(posts) + [EventRecord("X", "video_view", START - 10)]
    kept, _ = filter_on_schedule(build_course(config, ev, posts))
    assert kept.threads["t"].root.post_id == "p2"


def _random_course(seed, config):
    rng = random.Random(seed)
    students = [f"s{i}" for i in range(15)]
    events = []
    for _ in range(80):
        s = rng.choice(students)
        ts = START + rng.uniform(-2, 6 * 7 + 2) * 86400
        events.append(EventRecord(s, rng.choice(["video_view", "submission", "video_download"]), ts))
    return build_course(config, events), events


@pytest.mark.parametrize("seed", range(5))
def test_filter_matches_rescan_and_is_idempotent(config, seed):
    course, raw = _random_course(seed, config)
    once, excluded = filter_on_schedule(course)
    end = START + 6 * SECONDS_PER_WEEK
    assert excluded == {e.student_id for e in raw if not START <= e.timestamp < end}
    twice, again = filter_on_schedule(once)
    assert twice == once and again == set()
    assert active_students(once) <= active_students(course)
    assert active_students(course) == {e.student_id for e in raw}


def test_active_students_excludes_outcome_only(config):
    c = build_course(config, [EventRecord("A", "video_view", at(1))],
                     (), [StudentOutcome("A", None, False), StudentOutcome("Z", None, False)])
    assert active_students(c) == {"A"}


def test_empty_summary(config):
    s = dataset_summary(build_course(config))
    assert all(v == 0 for v in vars(s).values())


def test_summary_single_thread(config):
    posts = thread_of("t", ["A", "B", "C"])
    s = dataset_summary(build_course(config, post_events(posts), posts))
    assert (s.thread_count, s.thread_avg_length, s.thread_max_length, s.thread_min_length) == (1, 3, 3, 3)
    assert s.forum_active == 3 and s.forum_posts == 3


def test_summary_matches_recount():
    course, outcomes, _ = generate_course(SynthConfig(n_students=300, forum_participation=0.3, seed=4))
    s = dataset_summary(course)
    posts = [p for t in course.threads.values() for p in t.posts]
    lengths = {}
    for p in posts:
        lengths[p.thread_id] = lengths.get(p.thread_id, 0) + 1
    assert s.enrolled == len(course.outcomes)
    assert s.forum_active == len({p.author_id for p in posts})
    assert s.with_submissions == len({e.student_id for e in course.events if e.event_type == "submission"})
    assert s.forum_posts == len(posts)
    assert s.with_activity == len({e.student_id for e in course.events if e.timestamp is not None})
    assert s.nonzero_grades == sum(1 for o in course.outcomes.values() if (o.final_grade or 0) > 0)
    assert s.certificates == sum(o.certificate for o in course.outcomes.values())
    assert s.thread_count == len(lengths)
    assert s.thread_max_length == max(lengths.values())
    assert s.thread_min_length == min(lengths.values())
    assert s.thread_avg_length == pytest.approx(len(posts) / len(lengths))


def test_round_trip(tmp_path, small_course):
    save_course(small_course, tmp_path / "a")
    once = load_course_dir(tmp_path / "a")
    assert once == small_course
    save_course(once, tmp_path / "b")
    assert load_course_dir(tmp_path / "b") == once
    for name in ("config.txt", "events.jsonl", "forum.jsonl", "outcomes.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_synthetic_round_trip(tmp_path):
    course, _, _ = generate_course(SynthConfig(n_students=100, forum_participation=0.4, seed=1))
    save_course(course, tmp_path)
    assert load_course_dir(tmp_path) == course


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "events.jsonl"
    good = {"student_id": "A", "event_type": "video_view", "timestamp": START}
    path.write_text(json.dumps(good) + "\n{not json\n")
    with pytest.raises(ParseError) as info:
        read_events(path)
    assert info.value.line == 2


def test_duplicate_post_id_in_file(tmp_path):
    row = {"post_id": "p", "thread_id": "t", "author_id": "A", "timestamp": START}
    path = tmp_path / "forum.jsonl"
    path.write_text(json.dumps(row) + "\n" + json.dumps(row) + "\n")
    with pytest.raises(IntegrityError):
        read_forum(path)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.floats(-3, 45, allow_nan=False)), max_size=30))
def test_filter_properties(rows):
    cfg = CourseConfig("h", "edx_like", START, 6)
    ev = [EventRecord(f"s{s}", "chapter_view", START + d * 86400) for s, d in rows]
    course = build_course(cfg, ev)
    once, _ = filter_on_schedule(course)
    assert filter_on_schedule(once)[0] == once
    assert active_students(once) <= active_students(course)
    assert all(cfg.in_window(e.timestamp) for e in once.events)
