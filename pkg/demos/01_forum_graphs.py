"""
Two ways to read a discussion thread
====================================

A thread is a list of posts in the order they were made.  Turning it into a
who-talks-to-whom graph needs an assumption about who a reply is aimed at.
"""

from mooc_attrition.forum_graph import build_graph, graph_stats
from mooc_attrition.ingest import CourseConfig, ForumPost, assemble_threads, parse_timestamp

start = parse_timestamp("2013-10-24T00:00:00Z")
config = CourseConfig("demo", "coursera_like", start, num_weeks=6)

# Alice opens a thread, Bob answers her, Carol answers Bob.
posts = [
    ForumPost("p1", "t1", "alice", start + 60),
    ForumPost("p2", "t1", "bob", start + 120, parent_post_id="p1"),
    ForumPost("p3", "t1", "carol", start + 180, parent_post_id="p2"),
]
threads = assemble_threads(posts)

# type1 assumes every contributor read the whole thread first, so each reply
# points at all earlier authors.
g1 = build_graph(threads, "type1", cutoff_week=1, config=config)
print("type1:", dict(g1.edges))

# type2 treats the thread as a flat list of answers to the opening post.
g2 = build_graph(threads, "type2", cutoff_week=1, config=config)
print("type2:", dict(g2.edges))

# Repeated exchanges add weight rather than new edges.
more = posts + [ForumPost("p4", "t1", "bob", start + 240, parent_post_id="p3")]
g = build_graph(assemble_threads(more), "type1", 1, config)
print("with a second reply from bob:", dict(g.edges))
print("nodes, edges, weight, components:", tuple(graph_stats(g)))
