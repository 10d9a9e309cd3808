"""Complete (non-top-k) result computation for a fully refined query.

The chosen connections and term contexts form a connection graph over
context paths. Tree steps become pattern nodes joined by parent/child
edges; maximal parent/child-connected components are twigs, evaluated as
pattern trees over Dewey-ordered node streams; the remaining (link) edges
are cross-twig joins, executed hash-join style against the store's
materialized link edges. Rows that survive must also realize some chosen
connection step-for-step for every term pair, which keeps e.g. a
same-item sibling choice from admitting cross-item pairings.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from itertools import product
from typing import IO, Mapping, Sequence

from .connection_summary import Connection, walk_steps
from .corpus_store import ContextPath, CorpusStore, DeweyId
from .path_index import PathIndex
from .query_model import Query, term_admits


class PlanningError(Exception):
    pass


@dataclass(frozen=True)
class ResultRow:
    nodes: tuple[DeweyId, ...]
    paths: tuple[ContextPath, ...]


@dataclass
class FullResult:
    term_count: int
    rows: list[ResultRow]

    def schema(self) -> list[str]:
        cols: list[str] = []
        for i in range(1, self.term_count + 1):
            cols.extend([f"c_n{i}", f"c_p{i}"])
        return cols

    def column_paths(self, term_index: int) -> frozenset[ContextPath]:
        return frozenset(row.paths[term_index] for row in self.rows)

    def write_csv(self, fh: IO[str]) -> None:
        writer = csv.writer(fh)
        writer.writerow(self.schema())
        for row in self.rows:
            record: list[str] = []
            for node, path in zip(row.nodes, row.paths):
                record.extend([str(node), str(path)])
            writer.writerow(record)


@dataclass
class TwigPattern:
    id: int
    root: int
    paths: dict[int, ContextPath]
    terms: dict[int, tuple[int, ...]]          # pattern node -> bound terms
    children: dict[int, tuple[int, ...]]

    def pattern_nodes(self) -> list[int]:
        ordered: list[int] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            ordered.append(node)
            stack.extend(reversed(self.children.get(node, ())))
        return ordered


@dataclass(frozen=True)
class CrossTwigEdge:
    left_twig: int
    left_node: int
    right_twig: int
    right_node: int
    kind: str
    label: str


@dataclass
class ConfigPlan:
    term_paths: tuple[ContextPath, ...]
    twigs: list[TwigPattern]
    cross_edges: list[CrossTwigEdge]
    same_twig_links: list[CrossTwigEdge]
    term_node: dict[int, int]                  # term index -> pattern node


@dataclass
class MaterializePlan:
    configs: list[ConfigPlan]
    connections: dict[str, Connection]


# -- pattern construction ---------------------------------------------------


class _Patterns:
    """Pattern nodes with parent-uniqueness congruence: asserting a second
    parent for a node unifies the two parents recursively."""

    def __init__(self) -> None:
        self.uf: dict[int, int] = {}
        self.path: dict[int, ContextPath] = {}
        self.terms: dict[int, set[int]] = {}
        self.parent: dict[int, int] = {}
        self.links: list[tuple[int, int, str, str]] = []

    def new(self, path: ContextPath, term: int | None = None) -> int:
        nid = len(self.uf)
        self.uf[nid] = nid
        self.path[nid] = path
        self.terms[nid] = set() if term is None else {term}
        return nid

    def find(self, x: int) -> int:
        while self.uf[x] != x:
            self.uf[x] = self.uf[self.uf[x]]
            x = self.uf[x]
        return x

    def unify(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.path[ra] != self.path[rb]:
            raise PlanningError(
                f"cannot unify pattern nodes at {self.path[ra]} and {self.path[rb]}"
            )
        self.uf[rb] = ra
        self.terms[ra] |= self.terms[rb]
        pa = self.parent.pop(ra, None)
        pb = self.parent.pop(rb, None)
        if pa is not None:
            self.parent[ra] = pa
        if pa is not None and pb is not None:
            self.unify(pa, pb)
        elif pb is not None:
            self.parent[ra] = pb

    def assert_parent(self, child: int, parent: int) -> None:
        rc, rp = self.find(child), self.find(parent)
        existing = self.parent.get(rc)
        if existing is None:
            self.parent[rc] = rp
        else:
            self.unify(existing, rp)


def _build_config(
    term_paths: Sequence[ContextPath],
    pair_connections: Mapping[tuple[int, int], Connection],
) -> ConfigPlan:
    pat = _Patterns()
    term_node = {i: pat.new(path, term=i) for i, path in enumerate(term_paths)}
    for (i, j), conn in sorted(pair_connections.items()):
        steps = conn.steps_from(term_paths[i])
        cur = term_node[i]
        cur_path = term_paths[i]
        for step in steps:
            if step[0] == "down":
                nxt_path = cur_path.child(step[1])
                nxt = pat.new(nxt_path)
                pat.assert_parent(nxt, cur)
            elif step[0] == "up":
                nxt_path = cur_path.parent()
                if nxt_path is None or nxt_path.leaf != step[1]:
                    raise PlanningError(f"connection step {step} does not fit {cur_path}")
                nxt = pat.new(nxt_path)
                pat.assert_parent(cur, nxt)
            else:
                nxt_path = ContextPath.of(step[3])
                nxt = pat.new(nxt_path)
                pat.links.append((cur, nxt, step[1], step[2]))
            cur = nxt
            cur_path = nxt_path
        pat.unify(cur, term_node[j])

    # Collapse to representatives.
    reps = sorted({pat.find(n) for n in pat.uf})
    parent_of = {r: pat.find(p) for r, p in ((r, pat.parent[r]) for r in reps if r in pat.parent)}
    children: dict[int, list[int]] = {r: [] for r in reps}
    for child, parent in parent_of.items():
        children[parent].append(child)
    comp: dict[int, int] = {}

    def component(node: int) -> int:
        seen = [node]
        root = node
        while root in parent_of:
            root = parent_of[root]
            seen.append(root)
        for s in seen:
            comp[s] = root
        return root

    roots = sorted({component(r) for r in reps})

    def twig_sort_key(root: int) -> tuple:
        members = [r for r in reps if comp[r] == root]
        term_ids = sorted(t for r in members for t in pat.terms[r])
        return (term_ids[0] if term_ids else len(term_paths), str(pat.path[root]))

    twigs: list[TwigPattern] = []
    twig_of: dict[int, int] = {}
    for twig_id, root in enumerate(sorted(roots, key=twig_sort_key)):
        members = [r for r in reps if comp[r] == root]
        for r in members:
            twig_of[r] = twig_id
        twigs.append(
            TwigPattern(
                id=twig_id,
                root=root,
                paths={r: pat.path[r] for r in members},
                terms={r: tuple(sorted(pat.terms[r])) for r in members},
                children={
                    r: tuple(sorted(children[r], key=lambda c: (str(pat.path[c]), c)))
                    for r in members
                },
            )
        )
    cross: list[CrossTwigEdge] = []
    same: list[CrossTwigEdge] = []
    for a, b, kind, label in pat.links:
        ra, rb = pat.find(a), pat.find(b)
        edge = CrossTwigEdge(twig_of[ra], ra, twig_of[rb], rb, kind, label)
        (same if twig_of[ra] == twig_of[rb] else cross).append(edge)
    return ConfigPlan(
        term_paths=tuple(term_paths),
        twigs=twigs,
        cross_edges=sorted(cross, key=lambda e: (e.left_twig, e.right_twig, e.kind, e.label)),
        same_twig_links=same,
        term_node={i: pat.find(n) for i, n in term_node.items()},
    )


def plan_twigs(query: Query, connections: Mapping[str, Connection]) -> MaterializePlan:
    """Enumerate per-term path assignments consistent with the chosen
    connections and compile each into a twig/cross-twig plan."""
    refinement = query.refinement
    m = len(query.terms)
    if refinement is None or (refinement.selected_connections is None and m > 1):
        raise PlanningError("materialization requires a connection selection")
    selected = refinement.selected_connections or frozenset()
    chosen = [connections[cid] for cid in sorted(selected)]
    path_options: list[list[ContextPath]] = []
    for i in range(m):
        allowed = refinement.contexts_for(i)
        if not allowed:
            raise PlanningError(f"term {i} has no context selection")
        path_options.append(sorted(allowed))

    configs: list[ConfigPlan] = []
    uncovered: tuple[int, int] | None = None
    for assignment in product(*path_options):
        pair_choices: dict[tuple[int, int], list[Connection]] = {}
        feasible = True
        for i in range(m):
            for j in range(i + 1, m):
                options = [c for c in chosen if c.joins(assignment[i], assignment[j])]
                if not options:
                    feasible = False
                    if uncovered is None:
                        uncovered = (i, j)
                    break
                pair_choices[(i, j)] = options
            if not feasible:
                break
        if not feasible:
            continue
        pairs = sorted(pair_choices)
        for combo in product(*(pair_choices[p] for p in pairs)):
            mapping = dict(zip(pairs, combo))
            configs.append(_build_config(assignment, mapping))
    if not configs:
        pair = uncovered or (0, min(1, m - 1))
        raise PlanningError(
            f"term pair {pair} has no chosen connection joining its selected contexts"
        )
    return MaterializePlan(configs=configs, connections=dict(connections))


# -- evaluation ---------------------------------------------------------------


def _twig_rows(
    store: CorpusStore,
    index: PathIndex,
    query: Query,
    twig: TwigPattern,
) -> tuple[list[int], list[tuple[DeweyId, ...]]]:
    """Structural join over Dewey-sorted candidate streams: returns the
    pattern-node order and the matching binding rows."""

    def candidates(node: int) -> list[DeweyId]:
        ids = list(store.nodes_at(twig.paths[node]))
        for t in twig.terms.get(node, ()):
            ids = [n for n in ids if term_admits(query, t, store.nodes[n])]
        return sorted(ids)

    order = twig.pattern_nodes()
    position = {n: i for i, n in enumerate(order)}
    rows: list[tuple[DeweyId, ...]] = [(c,) for c in candidates(twig.root)]
    for node in order[1:]:
        parent = next(p for p in order if node in twig.children.get(p, ()))
        grouped: dict[DeweyId, list[DeweyId]] = {}
        for c in candidates(node):
            grouped.setdefault(c.parent(), []).append(c)
        extended: list[tuple[DeweyId, ...]] = []
        for row in rows:
            for c in grouped.get(row[position[parent]], ()):
                extended.append(row + (c,))
        rows = extended
        if not rows:
            break
    return order, rows


def _conforms(
    store: CorpusStore,
    chosen: Sequence[Connection],
    nodes: Sequence[DeweyId],
    paths: Sequence[ContextPath],
    walk_cache: dict,
) -> bool:
    m = len(nodes)
    for i in range(m):
        for j in range(i + 1, m):
            ok = False
            for conn in chosen:
                if not conn.joins(paths[i], paths[j]):
                    continue
                steps = conn.steps_from(paths[i])
                key = (nodes[i], steps)
                ends = walk_cache.get(key)
                if ends is None:
                    ends = frozenset(walk_steps(store, nodes[i], steps))
                    walk_cache[key] = ends
                if nodes[j] in ends:
                    ok = True
                    break
            if not ok:
                return False
    return True


def evaluate(
    store: CorpusStore,
    index: PathIndex,
    query: Query,
    plan: MaterializePlan,
) -> FullResult:
    refinement = query.refinement
    assert refinement is not None
    selected = refinement.selected_connections or frozenset()
    chosen = [plan.connections[cid] for cid in sorted(selected)]
    chosen.sort(key=lambda c: (c.length, c.id))  # cheap walks first
    m = len(query.terms)
    result_rows: set[ResultRow] = set()
    walk_cache: dict = {}
    for config in plan.configs:
        twig_results: list[tuple[list[int], list[tuple[DeweyId, ...]]]] = []
        empty = False
        for twig in config.twigs:
            order, rows = _twig_rows(store, index, query, twig)
            for edge in config.same_twig_links:
                if edge.left_twig == twig.id and edge.right_twig == twig.id:
                    li, ri = order.index(edge.left_node), order.index(edge.right_node)
                    rows = [
                        r
                        for r in rows
                        if store.edge_exists(r[li], r[ri], edge.kind, edge.label)
                    ]
            if not rows:
                empty = True
                break
            twig_results.append((order, rows))
        if empty:
            continue
        merged = _join_twigs(store, config, twig_results)
        for binding in merged:
            nodes = tuple(binding[config.term_node[i]] for i in range(m))
            paths = tuple(store.nodes[n].context for n in nodes)
            if _conforms(store, chosen, nodes, paths, walk_cache):
                result_rows.add(ResultRow(nodes, paths))
    ordered = sorted(result_rows, key=lambda r: r.nodes)
    return FullResult(term_count=m, rows=ordered)


def _join_twigs(
    store: CorpusStore,
    config: ConfigPlan,
    twig_results: list[tuple[list[int], list[tuple[DeweyId, ...]]]],
) -> list[dict[int, DeweyId]]:
    """Join twig outputs across link edges; the smaller side builds the
    hash table."""
    groups: list[dict[str, object]] = []
    group_of: dict[int, int] = {}
    for twig_id, (order, rows) in enumerate(twig_results):
        groups.append(
            {"rows": [dict(zip(order, row)) for row in rows], "twigs": {twig_id}}
        )
        group_of[twig_id] = twig_id

    def resolve(twig_id: int) -> int:
        while group_of[twig_id] != twig_id:
            twig_id = group_of[twig_id]
        return twig_id

    for edge in config.cross_edges:
        ga, gb = resolve(edge.left_twig), resolve(edge.right_twig)
        if ga == gb:
            rows = [
                r
                for r in groups[ga]["rows"]
                if store.edge_exists(r[edge.left_node], r[edge.right_node], edge.kind, edge.label)
            ]
            groups[ga]["rows"] = rows
            continue
        left_rows: list[dict[int, DeweyId]] = groups[ga]["rows"]
        right_rows: list[dict[int, DeweyId]] = groups[gb]["rows"]
        build_left = len(left_rows) <= len(right_rows)
        small, big = (left_rows, right_rows) if build_left else (right_rows, left_rows)
        small_key = edge.left_node if build_left else edge.right_node
        big_key = edge.right_node if build_left else edge.left_node
        by_node: dict[DeweyId, list[dict[int, DeweyId]]] = {}
        for r in small:
            by_node.setdefault(r[small_key], []).append(r)
        joined: list[dict[int, DeweyId]] = []
        for r in big:
            anchor = r[big_key]
            for other in store.adjacent(anchor):
                if not store.edge_exists(anchor, other, edge.kind, edge.label):
                    continue
                for s in by_node.get(other, ()):
                    joined.append({**s, **r})
        groups[ga]["rows"] = joined
        groups[ga]["twigs"] |= groups[gb]["twigs"]
        group_of[gb] = ga
        groups[gb] = {"rows": [], "twigs": set()}

    final_groups = [groups[resolve(t)] for t in {resolve(t) for t in group_of}]
    # Twigs with no cross edge between them would be a disconnected plan;
    # planning guarantees connectivity, so a single group remains.
    live = [g for g in final_groups if g["twigs"]]
    if len(live) != 1:
        rows_product: list[dict[int, DeweyId]] = [{}]
        for g in live:
            rows_product = [{**a, **b} for a in rows_product for b in g["rows"]]
        return rows_product
    return live[0]["rows"]


def materialize(
    store: CorpusStore,
    index: PathIndex,
    query: Query,
    connections: Mapping[str, Connection],
) -> FullResult:
    """Plan + evaluate; an explicitly empty connection selection yields an
    empty result with a warning instead of a planning error."""
    refinement = query.refinement
    m = len(query.terms)
    if refinement is None or (refinement.selected_connections is None and m > 1):
        raise PlanningError("materialization requires a connection selection")
    if m > 1 and not refinement.selected_connections:
        warnings.warn("no connections chosen: the materialized result is empty")
        return FullResult(term_count=m, rows=[])
    plan = plan_twigs(query, connections)
    return evaluate(store, index, query, plan)
