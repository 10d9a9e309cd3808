"""Pairwise connections between matched contexts, extracted from top-k
results for user selection.

A connection is a step sequence (up/down tree steps plus typed link hops)
between two context paths. Connections are harvested two ways: by lifting
the tied-shortest walks that join each node pair inside the top-k tuples
(the realizations of the pair), and by enumerating simple routes in the
guide graph between the located endpoint contexts, bounded by the search
radius. Guide-derived routes can lack any instance in the data; those are
the expected false positives that dataguide merging introduces, and a
diagnostic counts them.

Connections are canonicalized (oriented from the lexicographically smaller
endpoint, then the smaller step rendering) so ids are stable across runs;
the cache holds guide-derived connections only, which are pure functions
of the guide set.
"""

from __future__ import annotations

import hashlib
import json
import threading
import warnings
from dataclasses import dataclass, field

from .corpus_store import ContextPath, CorpusStore, DeweyId
from .dataguide import GuideSet
from .query_model import InvalidSelectionError, Query
from .topk_engine import DEFAULT_RADIUS_CAP, TopKResult

MAX_PATHS_PER_PAIR = 64

Step = tuple  # ("up", name) | ("down", name) | ("link", kind, label, to_path)


def _reverse_steps(labels: list[ContextPath], steps: list[Step]) -> tuple[Step, ...]:
    out: list[Step] = []
    for i in range(len(steps) - 1, -1, -1):
        step = steps[i]
        origin = labels[i]  # node the forward step left from
        if step[0] == "down":
            out.append(("up", origin.leaf))
        elif step[0] == "up":
            out.append(("down", origin.leaf))
        else:
            out.append(("link", step[1], step[2], str(origin)))
    return tuple(out)


@dataclass(frozen=True)
class Connection:
    id: str
    endpoint_a: ContextPath
    endpoint_b: ContextPath
    steps: tuple[Step, ...]        # walking a -> b
    steps_back: tuple[Step, ...]   # walking b -> a

    @property
    def length(self) -> int:
        return len(self.steps)

    def endpoints(self) -> tuple[ContextPath, ContextPath]:
        return (self.endpoint_a, self.endpoint_b)

    def joins(self, p: ContextPath, q: ContextPath) -> bool:
        return {p, q} == {self.endpoint_a, self.endpoint_b}

    def steps_from(self, start: ContextPath) -> tuple[Step, ...]:
        if start == self.endpoint_a:
            return self.steps
        if start == self.endpoint_b:
            return self.steps_back
        raise ValueError(f"{start} is not an endpoint of {self.id}")

    def render(self) -> str:
        parts = [self.endpoint_a.leaf or str(self.endpoint_a)]
        for step in self.steps:
            if step[0] == "up":
                parts.append(f"↑{step[1]}")
            elif step[0] == "down":
                parts.append(f"↓{step[1]}")
            else:
                parts.append(f"-[{step[2] or step[1]}]→{ContextPath.of(step[3]).leaf}")
        return " ".join(parts)


def make_connection(labels: list[ContextPath], steps: list[Step]) -> Connection:
    """Canonicalize a concrete walk (node context labels plus steps) into
    an orientation-independent connection with a stable id."""
    pa, pb = labels[0], labels[-1]
    back = _reverse_steps(labels, steps)
    forward_key = (str(pa), tuple(steps))
    reverse_key = (str(pb), back)
    if reverse_key < forward_key:
        pa, pb = pb, pa
        steps_t, back = back, tuple(steps)
    else:
        steps_t = tuple(steps)
    digest = hashlib.sha1(
        json.dumps([str(pa), str(pb), list(steps_t)]).encode("utf-8")
    ).hexdigest()[:12]
    return Connection(digest, pa, pb, steps_t, back)


# -- instance-level enumeration ------------------------------------------


def _instance_options(store: CorpusStore, node_id: DeweyId) -> list[tuple[DeweyId, Step]]:
    options: list[tuple[DeweyId, Step]] = []
    parent = node_id.parent()
    if parent is not None:
        options.append((parent, ("up", store.nodes[parent].name)))
    for child in store.children(node_id):
        options.append((child, ("down", store.nodes[child].name)))
    for edge in store._edges_by_node.get(node_id, ()):
        other = edge.to_id if edge.from_id == node_id else edge.from_id
        options.append(
            (other, ("link", edge.kind, edge.label, str(store.nodes[other].context)))
        )
    options.sort(key=lambda pair: (pair[1], pair[0]))
    return options


def shortest_instance_paths(
    store: CorpusStore,
    start: DeweyId,
    goal: DeweyId,
    max_len: int,
    limit: int = MAX_PATHS_PER_PAIR,
) -> list[tuple[list[ContextPath], list[Step]]]:
    """Every tied-shortest walk from start to goal within max_len steps
    (shortest walks are node-simple by construction), in deterministic
    order, capped at limit. These are the connections the pair realizes."""
    dist: dict[DeweyId, int] = {goal: 0}
    frontier = [goal]
    depth = 0
    while frontier and depth < max_len and start not in dist:
        depth += 1
        nxt_frontier: list[DeweyId] = []
        for node in frontier:
            for other in store.adjacent(node):
                if other not in dist:
                    dist[other] = depth
                    nxt_frontier.append(other)
        frontier = nxt_frontier
    if start not in dist:
        return []
    found: list[tuple[list[ContextPath], list[Step]]] = []

    def dfs(node: DeweyId, labels: list[ContextPath], steps: list[Step]) -> None:
        if len(found) >= limit:
            return
        if node == goal:
            found.append((labels + [store.nodes[goal].context], list(steps)))
            return
        remaining = dist[node]
        for nxt, step in _instance_options(store, node):
            if dist.get(nxt) != remaining - 1:
                continue
            labels.append(store.nodes[node].context)
            steps.append(step)
            dfs(nxt, labels, steps)
            steps.pop()
            labels.pop()

    dfs(start, [], [])
    return found


def walk_steps(
    store: CorpusStore, start: DeweyId, steps: tuple[Step, ...]
) -> list[DeweyId]:
    """Every node reachable from start by following the step sequence
    exactly, along node-simple walks. Used both to test whether a
    connection is instantiated and to filter materialized tuples."""
    results: set[DeweyId] = set()

    def advance(node: DeweyId, i: int, visited: set[DeweyId]) -> None:
        if i == len(steps):
            results.add(node)
            return
        step = steps[i]
        if step[0] == "down":
            for child in store.children(node):
                if child not in visited and store.nodes[child].name == step[1]:
                    advance(child, i + 1, visited | {child})
        elif step[0] == "up":
            parent = node.parent()
            if (
                parent is not None
                and parent not in visited
                and store.nodes[parent].name == step[1]
            ):
                advance(parent, i + 1, visited | {parent})
        else:
            kind, label, to_path = step[1], step[2], step[3]
            for edge in store._edges_by_node.get(node, ()):
                if edge.kind != kind or edge.label != label:
                    continue
                other = edge.to_id if edge.from_id == node else edge.from_id
                if other in visited:
                    continue
                if str(store.nodes[other].context) != to_path:
                    continue
                advance(other, i + 1, visited | {other})

    advance(start, 0, {start})
    return sorted(results)


# -- guide-level enumeration -----------------------------------------------


def simple_guide_paths(
    gs: GuideSet,
    start: tuple[int, ContextPath],
    goal: tuple[int, ContextPath],
    max_len: int,
    limit: int = MAX_PATHS_PER_PAIR,
) -> list[tuple[list[ContextPath], list[Step]]]:
    """Node-simple guide-graph walks from start to goal within max_len
    steps. When start == goal the walks are the simple cycles through that
    node (two contexts mapping to one guide node can still be related in
    several ways, e.g. a geographic and a trade route between countries)."""
    found: list[tuple[list[ContextPath], list[Step]]] = []

    def dfs(node, labels, steps, visited) -> None:
        if len(found) >= limit or len(steps) >= max_len:
            return
        for nxt, step in sorted(
            gs.graph_neighbors(node), key=lambda p: (p[1], p[0][0], str(p[0][1]))
        ):
            labels.append(node[1])
            steps.append(step)
            if nxt == goal:
                found.append((list(labels) + [goal[1]], list(steps)))
            elif nxt not in visited:
                visited.add(nxt)
                dfs(nxt, labels, steps, visited)
                visited.discard(nxt)
            steps.pop()
            labels.pop()

    dfs(start, [], [], {start})
    return found


class ConnectionCache:
    """Guide-derived connections per unordered endpoint-path pair. Entries
    are pure functions of the guide set, so concurrent writes are
    value-identical and last-write-wins is safe."""

    def __init__(self) -> None:
        self._entries: dict[tuple[str, str], frozenset[Connection]] = {}
        self._lock = threading.Lock()

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def get(self, key: tuple[str, str]) -> frozenset[Connection] | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: tuple[str, str], value: frozenset[Connection]) -> None:
        with self._lock:
            self._entries[key] = value


def guide_connections(
    gs: GuideSet,
    pa: ContextPath,
    pb: ContextPath,
    radius_cap: int,
    cache: ConnectionCache | None = None,
) -> frozenset[Connection]:
    key = tuple(sorted((str(pa), str(pb))))
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    conns: set[Connection] = set()
    for ga in gs.locate_or_fail(pa):
        for gb in gs.locate_or_fail(pb):
            for labels, steps in simple_guide_paths(gs, ga, gb, radius_cap):
                conns.add(make_connection(labels, steps))
    result = frozenset(conns)
    if cache is not None:
        cache.put(key, result)
    return result


# -- the summary ------------------------------------------------------------


@dataclass
class ConnectionSummaryResult:
    connections: dict[str, Connection] = field(default_factory=dict)
    groups: dict[tuple[int, int], tuple[str, ...]] = field(default_factory=dict)
    provenance: dict[str, frozenset[int]] = field(default_factory=dict)

    def ids(self) -> frozenset[str]:
        return frozenset(self.connections)

    def for_pair(self, i: int, j: int) -> list[Connection]:
        pair = (min(i, j), max(i, j))
        return [self.connections[cid] for cid in self.groups.get(pair, ())]

    def render(self) -> str:
        lines = []
        for pair in sorted(self.groups):
            lines.append(f"terms {pair[0]} & {pair[1]}:")
            for cid in self.groups[pair]:
                conn = self.connections[cid]
                seen = len(self.provenance.get(cid, frozenset()))
                lines.append(
                    f"  {cid}\tlen={conn.length}\ttuples={seen}\t{conn.render()}"
                )
        return "\n".join(lines)


def summarize_connections(
    store: CorpusStore,
    gs: GuideSet,
    topk: TopKResult,
    radius_cap: int = DEFAULT_RADIUS_CAP,
    cache: ConnectionCache | None = None,
) -> ConnectionSummaryResult:
    """Connections realized inside top-k tuples plus guide-graph routes
    between the matched contexts, grouped by unordered term pair and
    ordered shortest-first."""
    result = ConnectionSummaryResult()
    grouped: dict[tuple[int, int], set[str]] = {}
    prov: dict[str, set[int]] = {}
    for t_index, tup in enumerate(topk.tuples):
        m = len(tup.nodes)
        for i in range(m):
            for j in range(i + 1, m):
                a, b = tup.nodes[i], tup.nodes[j]
                pair = (i, j)
                bucket = grouped.setdefault(pair, set())
                if a != b:
                    for labels, steps in shortest_instance_paths(
                        store, a, b, radius_cap
                    ):
                        conn = make_connection(labels, steps)
                        result.connections[conn.id] = conn
                        bucket.add(conn.id)
                        prov.setdefault(conn.id, set()).add(t_index)
                pa = store.nodes[a].context
                pb = store.nodes[b].context
                for conn in guide_connections(gs, pa, pb, radius_cap, cache):
                    result.connections.setdefault(conn.id, conn)
                    bucket.add(conn.id)
                    prov.setdefault(conn.id, set())
    for pair, ids in grouped.items():
        ordered = sorted(ids, key=lambda cid: (result.connections[cid].length, cid))
        result.groups[pair] = tuple(ordered)
    result.provenance = {cid: frozenset(ts) for cid, ts in prov.items()}
    return result


def count_false_positives(store: CorpusStore, summary: ConnectionSummaryResult) -> int:
    """Summary connections with no structural instantiation anywhere in
    the corpus (guide merging artifacts)."""
    count = 0
    for conn in summary.connections.values():
        if not _instantiated(store, conn):
            count += 1
    return count


def _instantiated(store: CorpusStore, conn: Connection) -> bool:
    for start in store.nodes_at(conn.endpoint_a):
        ends = walk_steps(store, start, conn.steps)
        if any(store.nodes[e].context == conn.endpoint_b for e in ends):
            return True
    return False


def apply_connection_selection(
    query: Query, summary: ConnectionSummaryResult, chosen: frozenset[str]
) -> Query:
    unknown = chosen - summary.ids()
    if unknown:
        raise InvalidSelectionError(
            f"unknown connection ids: {', '.join(sorted(unknown))}"
        )
    if not chosen:
        warnings.warn("empty connection selection: materialization will be empty")
    return query.with_connections(frozenset(chosen))
