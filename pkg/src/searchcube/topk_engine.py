"""Threshold-style top-k search over the data graph.

Tuples bind one node per query term; a tuple is valid when every node
satisfies its term (and the context refinement, when present) and every
node pair is connected within radius_cap undirected hops. The aggregate
score is sum(content scores) / (1 + total pairwise distance), which is
monotone in both ingredients, so the usual threshold-algorithm bound
(best possible score of an entirely unseen tuple, assuming distance 0)
is sound for early termination.

Sorted access round-robins the per-term ranked node streams; each newly
seen node is completed into candidate tuples by expanding its radius_cap
neighborhood, so every valid tuple containing a seen node is scored before
the threshold test runs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

from .corpus_store import ContextPath, CorpusStore, DeweyId
from .path_index import PathIndex
from .query_model import Query, allowed_paths

DEFAULT_K = 10
DEFAULT_RADIUS_CAP = 6

ScoreFn = Callable[[Sequence[float], int], float]


def aggregate_score(content_scores: Sequence[float], distance: int) -> float:
    return sum(content_scores) / (1 + distance)


@dataclass(frozen=True)
class ScoredTuple:
    nodes: tuple[DeweyId, ...]
    paths: tuple[ContextPath, ...]
    content_scores: tuple[float, ...]
    distance: int
    score: float

    def sort_key(self) -> tuple:
        return (-self.score, self.nodes)


@dataclass
class TopKResult:
    k: int
    tuples: list[ScoredTuple]

    def node_tuples(self) -> list[tuple[DeweyId, ...]]:
        return [t.nodes for t in self.tuples]


def neighborhood(store: CorpusStore, start: DeweyId, radius: int) -> dict[DeweyId, int]:
    """BFS distances over the undirected graph (all edge kinds), out to
    radius hops."""
    dist = {start: 0}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        d = dist[current]
        if d == radius:
            continue
        for nxt in store.adjacent(current):
            if nxt not in dist:
                dist[nxt] = d + 1
                queue.append(nxt)
    return dist


def connection_distance(
    store: CorpusStore, nodes: Sequence[DeweyId], radius_cap: int = DEFAULT_RADIUS_CAP
) -> int | None:
    """Sum of pairwise undirected shortest-path lengths, each capped at
    radius_cap; None when some pair is farther apart than the cap."""
    for node_id in nodes:
        store.node(node_id)
    total = 0
    balls: dict[DeweyId, dict[DeweyId, int]] = {}
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            a, b = nodes[i], nodes[j]
            if a == b:
                continue
            if a not in balls:
                balls[a] = neighborhood(store, a, radius_cap)
            d = balls[a].get(b)
            if d is None:
                return None
            total += d
    return total


class _TupleCollector:
    def __init__(self, k: int):
        self.k = k
        self.seen: set[tuple[DeweyId, ...]] = set()
        self.best: list[ScoredTuple] = []

    def add(self, tup: ScoredTuple) -> None:
        if tup.nodes in self.seen:
            return
        self.seen.add(tup.nodes)
        self.best.append(tup)
        self.best.sort(key=ScoredTuple.sort_key)
        del self.best[self.k * 4 :]  # keep slack so late ties stay comparable

    def kth_score(self) -> float | None:
        if len(self.best) < self.k:
            return None
        return self.best[self.k - 1].score


def top_k(
    store: CorpusStore,
    index: PathIndex,
    query: Query,
    k: int = DEFAULT_K,
    radius_cap: int = DEFAULT_RADIUS_CAP,
    scorer: ScoreFn = aggregate_score,
    distinct: bool = False,
) -> TopKResult:
    if k < 1:
        raise ValueError("k must be at least 1")
    m = len(query.terms)
    streams: list[list[tuple[DeweyId, float]]] = []
    for i, term in enumerate(query.terms):
        allowed = allowed_paths(query, i)
        filt = None if allowed is None else sorted(allowed)
        stream = [
            (node_id, score)
            for node_id, score in index.scan_nodes(term.search, filt)
            if term.context.matches(store.nodes[node_id])
        ]
        if not stream:
            return TopKResult(k, [])
        streams.append(stream)

    satisfying: list[dict[DeweyId, float]] = [dict(s) for s in streams]
    collector = _TupleCollector(k)
    balls: dict[DeweyId, dict[DeweyId, int]] = {}

    def ball(node_id: DeweyId) -> dict[DeweyId, int]:
        if node_id not in balls:
            balls[node_id] = neighborhood(store, node_id, radius_cap)
        return balls[node_id]

    def complete(term_index: int, node_id: DeweyId) -> None:
        """Score every valid tuple binding node_id at term_index."""
        reach = ball(node_id)
        partners: list[list[DeweyId]] = []
        for j in range(m):
            if j == term_index:
                partners.append([node_id])
                continue
            options = [other for other in satisfying[j] if other in reach]
            if not options:
                return
            partners.append(sorted(options))
        for combo in product(*partners):
            if distinct and len(set(combo)) != m:
                continue
            total = 0
            ok = True
            for a_i in range(m):
                for b_i in range(a_i + 1, m):
                    a, b = combo[a_i], combo[b_i]
                    if a == b:
                        continue
                    d = ball(a).get(b)
                    if d is None:
                        ok = False
                        break
                    total += d
                if not ok:
                    break
            if not ok:
                continue
            scores = tuple(satisfying[j][combo[j]] for j in range(m))
            collector.add(
                ScoredTuple(
                    nodes=combo,
                    paths=tuple(store.nodes[n].context for n in combo),
                    content_scores=scores,
                    distance=total,
                    score=scorer(scores, total),
                )
            )

    positions = [0] * m
    while True:
        progressed = False
        for i in range(m):
            if positions[i] >= len(streams[i]):
                continue
            node_id, _score = streams[i][positions[i]]
            positions[i] += 1
            progressed = True
            complete(i, node_id)
        if not progressed:
            break
        frontier = 0.0
        exhausted = True
        for i in range(m):
            if positions[i] < len(streams[i]):
                frontier += streams[i][positions[i]][1]
                exhausted = False
        if exhausted:
            break
        kth = collector.kth_score()
        if kth is not None and kth > frontier:
            break

    collector.best.sort(key=ScoredTuple.sort_key)
    return TopKResult(k, collector.best[:k])
