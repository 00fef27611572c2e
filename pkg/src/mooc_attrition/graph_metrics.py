"""Per-student social features on an :class:`InteractionGraph`."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DataError
from .forum_graph import InteractionGraph

SOCIAL_FEATURES = (
    "betweenness",
    "hub",
    "authority",
    "in_degree",
    "out_degree",
    "dropped_out_neighbors",
)


@dataclass(frozen=True)
class SocialFeatures:
    student_id: str
    betweenness: float = 0.0
    hub: float = 0.0
    authority: float = 0.0
    in_degree: int = 0
    out_degree: int = 0
    dropped_out_neighbors: float = 0.0

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, f)) for f in SOCIAL_FEATURES)


@dataclass(frozen=True)
class HitsResult:
    hub: dict[str, float]
    authority: dict[str, float]
    converged: bool
    iterations: int


def _successors(graph: InteractionGraph) -> tuple[list[str], list[list[int]]]:
    order = graph.node_list
    index = {v: i for i, v in enumerate(order)}
    succ: list[list[int]] = [[] for _ in order]
    for s, d in graph.edges:
        succ[index[s]].append(index[d])
    for lst in succ:
        lst.sort()
    return order, succ


def betweenness(graph: InteractionGraph) -> dict[str, float]:
    """Unnormalised directed betweenness, edge weights ignored (Brandes 2001).

    Sources are processed in sorted node order so the floating point sums
    are reproducible.
    """
    order, succ = _successors(graph)
    n = len(order)
    cb = [0.0] * n
    for s in range(n):
        stack: list[int] = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0] * n
        sigma[s] = 1
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return dict(zip(order, cb))


def hits(graph: InteractionGraph, tol: float = 1e-8, max_iter: int = 1000) -> HitsResult:
    """Hub and authority scores by power iteration on the weighted adjacency.

    Each sweep sets ``a = W.T @ h`` then ``h = W @ a`` and rescales both to
    unit L2 norm.  Iteration stops once neither vector moves by more than
    ``tol`` in any coordinate.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter at least 1")
    order, W = graph.adjacency()
    n = len(order)
    if n == 0 or not W.any():
        zeros = dict.fromkeys(order, 0.0)
        return HitsResult(zeros, dict(zeros), True, 0)

    h = np.full(n, 1.0 / np.sqrt(n))
    a = np.zeros(n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        a_new = W.T @ h
        a_new /= np.linalg.norm(a_new)
        h_new = W @ a_new
        h_new /= np.linalg.norm(h_new)
        change = max(np.abs(a_new - a).max(), np.abs(h_new - h).max())
        a, h = a_new, h_new
        if change < tol:
            converged = True
            break
    return HitsResult(dict(zip(order, h.tolist())), dict(zip(order, a.tolist())), converged, it)


def degrees(graph: InteractionGraph) -> dict[str, tuple[int, int]]:
    """Weighted (in_degree, out_degree) per node."""
    indeg = dict.fromkeys(graph.node_list, 0)
    outdeg = dict.fromkeys(graph.node_list, 0)
    for (s, d), w in graph.edges.items():
        outdeg[s] += w
        indeg[d] += w
    return {v: (indeg[v], outdeg[v]) for v in graph.node_list}


def neighbors(graph: InteractionGraph) -> dict[str, set[str]]:
    nb: dict[str, set[str]] = {v: set() for v in graph.nodes}
    for s, d in graph.edges:
        nb[s].add(d)
        nb[d].add(s)
    return nb


def dropped_out_neighbors(
    graph: InteractionGraph,
    last_active_week: Mapping[str, int],
    eval_week: int,
) -> dict[str, float]:
    """Share of each node's neighbours whose last active week precedes ``eval_week``."""
    missing = sorted(v for v in graph.nodes if v not in last_active_week)
    if missing:
        raise DataError(f"no last_active_week for graph nodes: {', '.join(missing[:5])}")
    out = {}
    for v, nb in sorted(neighbors(graph).items()):
        if not nb:
            out[v] = 0.0
            continue
        dropped = sum(last_active_week[u] < eval_week for u in nb)
        out[v] = dropped / len(nb)
    return out


def social_features(
    graph: InteractionGraph,
    last_active_week: Mapping[str, int],
    eval_week: int,
    *,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> dict[str, SocialFeatures]:
    bt = betweenness(graph)
    hr = hits(graph, tol=tol, max_iter=max_iter)
    deg = degrees(graph)
    dn = dropped_out_neighbors(graph, last_active_week, eval_week)
    return {
        v: SocialFeatures(
            student_id=v,
            betweenness=bt[v],
            hub=hr.hub[v],
            authority=hr.authority[v],
            in_degree=deg[v][0],
            out_degree=deg[v][1],
            dropped_out_neighbors=dn[v],
        )
        for v in graph.node_list
    }
