"""Student interaction graphs built from threaded forum discussions.

Two construction rules are supported:

``type1``
    every contribution points at the authors of *all* earlier contributions
    in its thread (the reader is assumed to have read the whole thread);
``type2``
    every reply points at the author who opened the thread.

Edges run from the replier to the earlier author, weights count how many
times that pair was produced.  Staff nodes are removed first, then isolated
nodes.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import UsageError
from .ingest import CourseConfig, ForumPost, Thread

GRAPH_KINDS = ("type1", "type2")


@dataclass(frozen=True)
class InteractionGraph:
    nodes: frozenset[str]
    edges: Mapping[tuple[str, str], int]
    kind: str
    cutoff_week: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", MappingProxyType(dict(sorted(self.edges.items()))))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and dict(self.edges) == dict(other.edges)
            and self.kind == other.kind
            and self.cutoff_week == other.cutoff_week
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def node_list(self) -> list[str]:
        """Nodes in canonical (sorted) order; matrix rows follow it."""
        return sorted(self.nodes)

    def adjacency(self) -> tuple[list[str], np.ndarray]:
        order = self.node_list
        index = {v: i for i, v in enumerate(order)}
        W = np.zeros((len(order), len(order)))
        for (s, d), w in self.edges.items():
            W[index[s], index[d]] = w
        return order, W

    @property
    def total_weight(self) -> int:
        return sum(self.edges.values())


@dataclass(frozen=True)
class GraphStats:
    nodes: int
    edges: int
    total_weight: int
    weak_components: int

    def __iter__(self):
        return iter((self.nodes, self.edges, self.total_weight, self.weak_components))


def thread_pairs(posts: Iterable[ForumPost], kind: str) -> list[tuple[str, str]]:
    """(replier, earlier author) pairs produced by one thread, self-pairs dropped.

    ``posts`` must already be in contribution order.
    """
    posts = list(posts)
    pairs: list[tuple[str, str]] = []
    if kind == "type1":
        for i, p in enumerate(posts):
            pairs.extend((p.author_id, q.author_id) for q in posts[:i] if q.author_id != p.author_id)
    elif kind == "type2":
        roots = [p for p in posts if p.parent_post_id is None]
        if roots:
            origin = roots[0].author_id
            pairs.extend(
                (p.author_id, origin)
                for p in posts
                if p.parent_post_id is not None and p.author_id != origin
            )
    else:
        raise UsageError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
    return pairs


def raw_edges(
    threads: Mapping[str, Thread] | Iterable[Thread],
    kind: str,
    cutoff_week: int,
    config: CourseConfig,
) -> Counter:
    """Edge multiplicities before any pruning."""
    if kind not in GRAPH_KINDS:
        raise UsageError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
    if not 1 <= cutoff_week <= config.num_weeks:
        raise UsageError(f"cutoff_week must be in 1..{config.num_weeks}")
    if isinstance(threads, Mapping):
        threads = threads.values()
    horizon = config.week_end(cutoff_week)
    counts: Counter = Counter()
    for t in threads:
        visible = [p for p in t.posts if config.start_time <= p.timestamp < horizon]
        counts.update(thread_pairs(visible, kind))
    return counts


def prune(edges: Mapping[tuple[str, str], int], staff_ids: Iterable[str] = ()) -> dict[tuple[str, str], int]:
    staff = set(staff_ids)
    return {(s, d): w for (s, d), w in edges.items() if s not in staff and d not in staff and s != d}


def build_graph(
    threads: Mapping[str, Thread] | Iterable[Thread],
    kind: str,
    cutoff_week: int,
    config: CourseConfig,
) -> InteractionGraph:
    """Interaction graph over posts made up to the end of ``cutoff_week``."""
    edges = prune(raw_edges(threads, kind, cutoff_week, config), config.staff_ids)
    # whatever survives staff removal with no incident edge is isolated
    nodes = {s for s, _ in edges} | {d for _, d in edges}
    return InteractionGraph(frozenset(nodes), edges, kind, cutoff_week)


def graph_stats(graph: InteractionGraph) -> GraphStats:
    n = len(graph.nodes)
    if n == 0:
        return GraphStats(0, 0, 0, 0)
    order, W = graph.adjacency()
    ncomp, _ = connected_components(csr_matrix(W), directed=True, connection="weak")
    return GraphStats(n, len(graph.edges), graph.total_weight, int(ncomp))


def write_edge_list(graph: InteractionGraph, path: str | Path) -> Path:
    """CSV edge list plus a ``<name>.meta.json`` sidecar carrying kind and cutoff."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["src", "dst", "weight"])
        for (s, d), weight in graph.edges.items():
            w.writerow([s, d, weight])
    meta = path.with_suffix(".meta.json")
    meta.write_text(
        json.dumps({"kind": graph.kind, "cutoff_week": graph.cutoff_week}, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return meta


def read_edge_list(path: str | Path) -> InteractionGraph:
    path = Path(path)
    meta = json.loads(path.with_suffix(".meta.json").read_text(encoding="utf-8"))
    edges = {}
    with path.open(encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            edges[(row["src"], row["dst"])] = int(row["weight"])
    nodes = {s for s, _ in edges} | {d for _, d in edges}
    return InteractionGraph(frozenset(nodes), edges, meta["kind"], int(meta["cutoff_week"]))
