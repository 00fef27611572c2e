"""
From raw events to weekly feature tables
========================================

Each week gets its own table.  Counts are cumulative up to the end of the
week and the forum graph only sees posts made so far.
"""

from mooc_attrition.featurize import assemble_weekly, compute_labels
from mooc_attrition.synth import SynthConfig, generate_course

course, outcomes, truth = generate_course(SynthConfig(n_students=400, forum_participation=0.3, seed=1))
print(len(course.events), "events,", len(course.threads), "threads")

for week in (1, 3, 6):
    table = assemble_weekly(course, week=week, graph_kind="type1")
    dropout = table.y("semester_dropout").mean()
    on_forum = (table.columns(["out_degree"])[:, 0] > 0).sum()
    print(f"week {week}: {len(table)} students, {on_forum} on the graph, {dropout:.2f} eventual dropouts")

# The semester label never changes from week to week, while week dropout
# only ever switches on.
sid = table.students[0]
for week in range(1, 7):
    print(week, compute_labels(course, week=week)[sid])

table.to_csv("weekly_week6.csv")
