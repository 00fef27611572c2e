"""
Course files on disk
====================

A course is four files: config.txt, events.jsonl, forum.jsonl and
outcomes.csv.  The same experiments are available from the shell as
``mooc-attrition <verb>``.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

from mooc_attrition.ingest import filter_on_schedule, load_course_dir
from mooc_attrition.synth import SynthConfig, generate_course, write_synthetic

work = Path(tempfile.mkdtemp())
course, _, truth = generate_course(SynthConfig(n_students=300, seed=2))
write_synthetic(course, truth, work / "course")
print(sorted(p.name for p in (work / "course").iterdir()))

# Loading validates the reply structure; filtering drops anyone active
# outside the official weeks (nobody, for generated data).
loaded = load_course_dir(work / "course")
kept, excluded = filter_on_schedule(loaded)
print("round trip equal:", loaded == course, "excluded:", len(excluded))

cmd = [sys.executable, "-m", "mooc_attrition.cli", "summarize",
       "--course-dir", str(work / "course"), "--out-dir", str(work / "reports")]
print("exit code", subprocess.run(cmd).returncode)
print((work / "reports" / "summary.csv").read_text())
