"""Command line entry point: ``mooc-attrition <verb> [options]``.

Exit codes: 0 success, 2 usage error, 3 data or integrity error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import pipeline
from .errors import MoocAttritionError, UsageError
from .featurize import LABELS
from .forum_graph import GRAPH_KINDS
from .ingest import PLATFORM_PROFILES, CoursePaths
from .synth import SynthConfig, generate_course, twin_courses, write_synthetic

log = logging.getLogger("mooc_attrition")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 as well, but via SystemExit
        raise UsageError(message)


def parse_weeks(text: str) -> list[int]:
    """``"1-6"`` or ``"1,3,5"``."""
    weeks: list[int] = []
    try:
        for part in text.split(","):
            if "-" in part:
                lo, hi = part.split("-", 1)
                weeks.extend(range(int(lo), int(hi) + 1))
            elif part.strip():
                weeks.append(int(part))
    except ValueError as exc:
        raise UsageError(f"bad --weeks value {text!r}") from exc
    return weeks


def _course_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--course-dir", action="append", default=[], help="directory holding config.txt, events.jsonl, forum.jsonl, outcomes.csv")
    p.add_argument("--config", action="append", default=[])
    p.add_argument("--events", action="append", default=[])
    p.add_argument("--forum", action="append", default=[])
    p.add_argument("--outcomes", action="append", default=[])
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--graph-kind", action="append", choices=GRAPH_KINDS)
    p.add_argument("--weeks", type=parse_weeks)
    p.add_argument("--target", action="append", choices=LABELS)
    p.add_argument("--model", default="logistic", choices=("logistic", "linear_svm"))
    p.add_argument("--whitelist", help="comma-separated features (cross-course)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mooc-attrition", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for verb, help_ in (
        ("summarize", "dataset characteristics per course"),
        ("graph-compare", "type1 vs type2 social-feature models"),
        ("weekly-predict", "per-week feature selection and nested CV"),
        ("survival", "Cox models, all features and social only"),
        ("cross-course", "train on one course, test on another"),
    ):
        _course_args(sub.add_parser(verb, help=help_))
    g = sub.add_parser("synth-generate", help="write a synthetic course (or twin pair)")
    g.add_argument("--out-dir", type=Path, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-students", type=int, default=1000)
    g.add_argument("--weeks", type=int, default=6)
    g.add_argument("--profile", choices=PLATFORM_PROFILES, default="coursera_like")
    g.add_argument("--reply-mode", choices=("root", "chain"), default="chain")
    g.add_argument("--forum-participation", type=float, default=0.1)
    g.add_argument("--twin", action="store_true", help="also write an edx_like twin under b/")
    return parser


def _course_sources(args) -> list[CoursePaths | Path]:
    sources: list[CoursePaths | Path] = [Path(d) for d in args.course_dir]
    n = len(args.config)
    if n:
        if not (len(args.events) == len(args.forum) == len(args.outcomes) == n):
            raise UsageError("--config, --events, --forum and --outcomes must be given the same number of times")
        sources += [
            CoursePaths(Path(c), Path(e), Path(f), Path(o))
            for c, e, f, o in zip(args.config, args.events, args.forum, args.outcomes)
        ]
    elif args.events or args.forum or args.outcomes:
        raise UsageError("--events/--forum/--outcomes require --config")
    if not sources:
        raise UsageError("no course given; use --course-dir or --config/--events/--forum/--outcomes")
    return sources


def _spec(args) -> pipeline.ExperimentSpec:
    default_kinds = list(GRAPH_KINDS) if args.verb == "graph-compare" else ["type1"]
    return pipeline.ExperimentSpec(
        courses=_course_sources(args),
        graph_kinds=args.graph_kind or default_kinds,
        targets=args.target or list(LABELS),
        weeks=args.weeks,
        model_kind=args.model,
        seed=args.seed,
        out_dir=args.out_dir,
        feature_whitelist=args.whitelist.split(",") if args.whitelist else None,
    )


_RUNNERS = {
    "summarize": pipeline.run_summary,
    "graph-compare": pipeline.run_graph_comparison,
    "weekly-predict": pipeline.run_weekly_prediction,
    "survival": pipeline.run_survival,
    "cross-course": pipeline.run_cross_course,
}


def _synth(args) -> None:
    cfg = SynthConfig(
        n_students=args.n_students,
        num_weeks=args.weeks,
        platform_profile=args.profile,
        reply_mode=args.reply_mode,
        forum_participation=args.forum_participation,
        seed=args.seed,
    )
    if args.twin:
        a, b = twin_courses(cfg, args.profile, "edx_like" if args.profile == "coursera_like" else "coursera_like")
        from .ingest import save_course

        save_course(a, args.out_dir / "a")
        save_course(b, args.out_dir / "b")
        return
    course, _, truth = generate_course(cfg)
    write_synthetic(course, truth, args.out_dir)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        if args.verb == "synth-generate":
            _synth(args)
        else:
            report = _RUNNERS[args.verb](_spec(args))
            log.info("wrote %d rows to %s", len(report.rows), args.out_dir / f"{report.name}.csv")
    except MoocAttritionError as exc:
        print(f"mooc-attrition: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"mooc-attrition: error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
