"""
Centrality on a small forum graph
=================================
"""

from mooc_attrition.forum_graph import InteractionGraph
from mooc_attrition.graph_metrics import betweenness, degrees, dropped_out_neighbors, hits

# A chain a -> b -> c plus a second asker d who also leans on c.
edges = {("a", "b"): 1, ("b", "c"): 2, ("d", "c"): 1}
g = InteractionGraph(frozenset("abcd"), edges, "type1", cutoff_week=3)

# b sits on the only shortest path from a to c.
print("betweenness", betweenness(g))

# Hubs point at good authorities and authorities are pointed at by good hubs.
# c collects every reply, so it carries all of the authority mass.
r = hits(g)
print("hub", {k: round(v, 4) for k, v in r.hub.items()})
print("authority", {k: round(v, 4) for k, v in r.authority.items()})
print("converged after", r.iterations, "sweeps")

print("(in, out) weighted degree", degrees(g))

# Suppose a was last seen in week 1 and everyone else is still around in
# week 3.  Half of b's neighbours have gone quiet by then.
last_seen = {"a": 1, "b": 3, "c": 3, "d": 2}
print("share of neighbours gone", dropped_out_neighbors(g, last_seen, eval_week=3))
