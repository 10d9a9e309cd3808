"""Shared fixtures: the World-Factbook-style walkthrough corpus, synthetic
guide corpora, random corpus generation, and independent oracles (BFS
distances, brute-force top-k, brute-force materialization)."""

from __future__ import annotations

import random
from collections import deque
from itertools import product
from pathlib import Path

import pytest

from searchcube.connection_summary import Connection
from searchcube.corpus_store import ContextPath, CorpusStore, DeweyId, LinkSpec, search_tokens
from searchcube.cube_builder import Catalog, CatalogDef, ContextEntry, KeyPath
from searchcube.path_index import PathIndex
from searchcube.query_model import Query, term_admits
from searchcube.search_expr import node_score

IMPORT_TC = ContextPath.of("/country/economy/import_partners/item/trade_country")
IMPORT_PCT = ContextPath.of("/country/economy/import_partners/item/percentage")
IMPORT_RANK = ContextPath.of("/country/economy/import_partners/item/rank")
EXPORT_TC = ContextPath.of("/country/economy/export_partners/item/trade_country")
EXPORT_PCT = ContextPath.of("/country/economy/export_partners/item/percentage")
COUNTRY = ContextPath.of("/country")
YEAR = ContextPath.of("/country/year")

QUERY_1 = '(*, "United States") AND (trade country, *) AND (percentage, *)'


def _country_doc(
    name: str,
    year: int,
    gdp_tag: str,
    gdp: str,
    imports: list[tuple[str, str, int]],
    exports: list[tuple[str, str]],
) -> str:
    import_items = "".join(
        f"<item><trade_country>{tc}</trade_country>"
        f"<percentage>{pct}</percentage><rank>{rank}</rank></item>"
        for tc, pct, rank in imports
    )
    export_items = "".join(
        f"<item><trade_country>{tc}</trade_country><percentage>{pct}</percentage></item>"
        for tc, pct in exports
    )
    return (
        f"<country>{name}"
        f"<year>{year}</year>"
        f"<economy><{gdp_tag}>{gdp}</{gdp_tag}>"
        f"<import_partners>{import_items}</import_partners>"
        f"<export_partners>{export_items}</export_partners>"
        f"</economy></country>"
    )


FACTBOOK_DOCS: dict[str, str] = {
    "factbook_canada_2007.xml": _country_doc(
        "Canada", 2007, "gdp_ppp", "1181",
        imports=[("United States", "54.9", 1)],
        exports=[("United States", "78.9")],
    ),
    "factbook_china_2007.xml": _country_doc(
        "China", 2007, "gdp_ppp", "7043",
        imports=[("Japan", "14.6", 1), ("United States", "7.5", 2)],
        exports=[("United States", "19.1")],
    ),
    "factbook_mexico_2007.xml": _country_doc(
        "Mexico", 2007, "gdp_ppp", "1353",
        imports=[("United States", "50.9", 1)],
        exports=[("United States", "82.2")],
    ),
    "factbook_us_2002.xml": _country_doc(
        "United States", 2002, "gdp", "10980",
        imports=[("China", "12.5", 1), ("Canada", "17.8", 2)],
        exports=[("Canada", "23.2")],
    ),
    "factbook_us_2005.xml": _country_doc(
        "United States", 2005, "gdp", "12360",
        imports=[("China", "13.8", 1), ("Canada", "17.2", 2)],
        exports=[("Canada", "22.8")],
    ),
    "factbook_us_2007.xml": _country_doc(
        "United States", 2007, "gdp_ppp", "13860",
        imports=[("China", "15", 1), ("Canada", "16.9", 2), ("Mexico", "10.6", 3)],
        exports=[("Canada", "21.4"), ("Mexico", "11.7")],
    ),
}

MONDIAL_DOC = (
    "<mondial>"
    "<sea>Pacific Ocean"
    "<bordering>United States</bordering>"
    "<bordering>China</bordering>"
    "<bordering>Canada</bordering>"
    "<bordering>Mexico</bordering>"
    "</sea>"
    "<sea>Atlantic Ocean"
    "<bordering>United States</bordering>"
    "<bordering>Canada</bordering>"
    "</sea>"
    "</mondial>"
)

TRADE_LINKS = [
    LinkSpec(kind="value_based", source=IMPORT_TC, target=COUNTRY, label="trade"),
    LinkSpec(kind="value_based", source=EXPORT_TC, target=COUNTRY, label="trade"),
]

BORDER_LINK = LinkSpec(
    kind="value_based",
    source=ContextPath.of("/mondial/sea/bordering"),
    target=COUNTRY,
    label="borders",
)


def ingest_docs(docs: dict[str, str], links: list[LinkSpec]) -> CorpusStore:
    items = sorted((name, text.encode("utf-8")) for name, text in docs.items())
    return CorpusStore.ingest(items, links)


@pytest.fixture(scope="session")
def factbook_store() -> CorpusStore:
    return ingest_docs(FACTBOOK_DOCS, TRADE_LINKS)


@pytest.fixture(scope="session")
def factbook_index(factbook_store) -> PathIndex:
    return PathIndex.build(factbook_store)


@pytest.fixture(scope="session")
def mondial_store() -> CorpusStore:
    docs = dict(FACTBOOK_DOCS)
    docs["mondial.xml"] = MONDIAL_DOC
    return ingest_docs(docs, TRADE_LINKS + [BORDER_LINK])


@pytest.fixture(scope="session")
def mondial_index(mondial_store) -> PathIndex:
    return PathIndex.build(mondial_store)


def factbook_catalog() -> Catalog:
    catalog = Catalog()
    trade_key = ("/country", "/country/year", "./trade_country")
    year_key = ("/country", "/country/year")

    def definition(name: str, kind: str, entries: list[tuple[str, tuple[str, ...]]]) -> CatalogDef:
        return CatalogDef(
            name,
            kind,
            tuple(
                ContextEntry(ContextPath.of(ctx), tuple(KeyPath(k) for k in keys))
                for ctx, keys in entries
            ),
        )

    catalog.add(definition("percentage", "fact", [(str(IMPORT_PCT), trade_key)]))
    catalog.add(definition("import_rank", "fact", [(str(IMPORT_RANK), trade_key)]))
    catalog.add(definition("export_percentage", "fact", [(str(EXPORT_PCT), trade_key)]))
    catalog.add(
        definition(
            "gdp",
            "fact",
            [
                ("/country/economy/gdp", year_key),
                ("/country/economy/gdp_ppp", year_key),
            ],
        )
    )
    catalog.add(definition("country", "dimension", [(str(COUNTRY), year_key)]))
    catalog.add(definition("year", "dimension", [(str(YEAR), year_key)]))
    catalog.add(definition("import_country", "dimension", [(str(IMPORT_TC), trade_key)]))
    catalog.add(definition("export_country", "dimension", [(str(EXPORT_TC), trade_key)]))
    return catalog


@pytest.fixture()
def catalog() -> Catalog:
    return factbook_catalog()


# -- mixed-schema corpus for false-positive checks ---------------------------


def mixed_schema_docs() -> tuple[dict[str, str], list[LinkSpec]]:
    docs: dict[str, str] = {}
    for i in range(3):
        docs[f"book_{i}.xml"] = (
            f"<shop><name>chain{i}</name><book_title>title {i}</book_title></shop>"
        )
        docs[f"food_{i}.xml"] = (
            f"<shop><name>chain{i}</name><dish_name>dish {i}</dish_name></shop>"
        )
    link = LinkSpec(
        kind="value_based",
        source=ContextPath.of("/shop/name"),
        target=ContextPath.of("/shop/name"),
        label="franchise",
    )
    return docs, [link]


@pytest.fixture(scope="session")
def mixed_store() -> CorpusStore:
    docs, links = mixed_schema_docs()
    return ingest_docs(docs, links)


# -- synthetic corpora for dataguide scaling ----------------------------------


def three_family_docs(doc_count: int = 300, seed: int = 7) -> dict[str, str]:
    rng = random.Random(seed)
    families = {
        "alpha": ["kind", "size", "grade", "owner", "site", "status"],
        "beta": ["title", "author", "isbn", "pages", "press", "lang"],
        "gamma": ["dish", "course", "origin", "season", "taste", "cost"],
    }
    optional = {
        "alpha": ["note_a", "note_b", "note_c", "note_d"],
        "beta": ["extra_a", "extra_b", "extra_c", "extra_d"],
        "gamma": ["tag_a", "tag_b", "tag_c", "tag_d"],
    }
    docs: dict[str, str] = {}
    names = sorted(families)
    for i in range(doc_count):
        family = names[i % 3]
        tags = list(families[family])
        for opt in optional[family]:
            if rng.random() < 0.5:
                tags.append(opt)
        body = "".join(f"<{t}>v{i}</{t}>" for t in tags)
        docs[f"{family}_{i:04d}.xml"] = f"<{family}>{body}</{family}>"
    return docs


def incomparable_docs(doc_count: int = 50) -> dict[str, str]:
    docs = {}
    for i in range(doc_count):
        docs[f"doc_{i:03d}.xml"] = (
            f"<d><core>x</core><only{i}a>x</only{i}a><only{i}b>x</only{i}b></d>"
        )
    return docs


# -- random corpora + independent oracles -------------------------------------


def random_corpus(seed: int, doc_count: int = 8) -> tuple[CorpusStore, PathIndex]:
    """Small random corpora (under 500 nodes) with a value-based link."""
    rng = random.Random(seed)
    tags = ["alpha", "beta", "gamma", "delta"]
    words = [f"w{i}" for i in range(10)]
    docs: dict[str, str] = {}
    for d in range(doc_count):
        parts = [f"<record><ident>key{d % 4}</ident>"]
        for tag in rng.sample(tags, k=rng.randint(2, 4)):
            children = "".join(
                f"<{c}>{rng.choice(words)} {rng.choice(words)}</{c}>"
                for c in rng.sample(["x", "y", "z"], k=rng.randint(1, 3))
            )
            parts.append(f"<{tag}>{rng.choice(words)}{children}</{tag}>")
        parts.append("<ref>key" + str(rng.randint(0, 3)) + "</ref></record>")
        docs[f"doc_{d:02d}.xml"] = "".join(parts)
    links = [
        LinkSpec(
            kind="value_based",
            source=ContextPath.of("/record/ref"),
            target=ContextPath.of("/record/ident"),
            label="refers",
        )
    ]
    store = ingest_docs(docs, links)
    return store, PathIndex.build(store)


def bfs_distance(store: CorpusStore, start: DeweyId, goal: DeweyId, cap: int) -> int | None:
    """Independent breadth-first distance used by the oracles."""
    if start == goal:
        return 0
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        node, d = frontier.popleft()
        if d == cap:
            continue
        for nxt in store.adjacent(node):
            if nxt in seen:
                continue
            if nxt == goal:
                return d + 1
            seen.add(nxt)
            frontier.append((nxt, d + 1))
    return None


def oracle_top_k(
    store: CorpusStore,
    query: Query,
    k: int,
    radius_cap: int,
) -> list[tuple[tuple[DeweyId, ...], float]]:
    """Brute force: enumerate all satisfying, connected tuples, score with
    the same aggregate, sort with the same tie-break."""
    per_term: list[list[DeweyId]] = []
    for i in range(len(query.terms)):
        nodes = [
            n for n in sorted(store.nodes) if term_admits(query, i, store.nodes[n])
        ]
        per_term.append(nodes)
    scored: list[tuple[float, tuple[DeweyId, ...]]] = []
    for combo in product(*per_term):
        total = 0
        ok = True
        for i in range(len(combo)):
            for j in range(i + 1, len(combo)):
                d = bfs_distance(store, combo[i], combo[j], radius_cap)
                if d is None:
                    ok = False
                    break
                total += d
            if not ok:
                break
        if not ok:
            continue
        content = sum(
            node_score(query.terms[i].search, search_tokens(store.nodes[combo[i]]))
            for i in range(len(combo))
        )
        scored.append((content / (1 + total), combo))
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [(combo, score) for score, combo in scored[:k]]


def oracle_walk(store: CorpusStore, start: DeweyId, steps, goal: DeweyId) -> bool:
    """Independent step walker (simple paths, exact step conformance)."""

    def go(node: DeweyId, i: int, seen: frozenset[DeweyId]) -> bool:
        if i == len(steps):
            return node == goal
        step = steps[i]
        nexts: list[DeweyId] = []
        if step[0] == "down":
            nexts = [
                c
                for c in store.children(node)
                if store.nodes[c].name == step[1] and c not in seen
            ]
        elif step[0] == "up":
            p = node.parent()
            if p is not None and p not in seen and store.nodes[p].name == step[1]:
                nexts = [p]
        else:
            for edge in store.link_edges:
                if edge.kind != step[1] or edge.label != step[2]:
                    continue
                other = None
                if edge.from_id == node:
                    other = edge.to_id
                elif edge.to_id == node:
                    other = edge.from_id
                if other is None or other in seen:
                    continue
                if str(store.nodes[other].context) != step[3]:
                    continue
                nexts.append(other)
        return any(go(n, i + 1, seen | {n}) for n in nexts)

    return go(start, 0, frozenset({start}))


def oracle_materialize(
    store: CorpusStore,
    query: Query,
    chosen: list[Connection],
) -> set[tuple[DeweyId, ...]]:
    """Brute force over all satisfying node tuples, keeping those where
    every term pair realizes some chosen connection step-for-step."""
    per_term: list[list[DeweyId]] = []
    for i in range(len(query.terms)):
        nodes = [
            n for n in sorted(store.nodes) if term_admits(query, i, store.nodes[n])
        ]
        per_term.append(nodes)
    rows: set[tuple[DeweyId, ...]] = set()
    for combo in product(*per_term):
        ok = True
        for i in range(len(combo)):
            for j in range(i + 1, len(combo)):
                pi = store.nodes[combo[i]].context
                pj = store.nodes[combo[j]].context
                pair_ok = False
                for conn in chosen:
                    if not conn.joins(pi, pj):
                        continue
                    steps = conn.steps_from(pi)
                    if oracle_walk(store, combo[i], steps, combo[j]):
                        pair_ok = True
                        break
                if not pair_ok:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            rows.add(combo)
    return rows


def materialize_walkthrough(store, index):
    """Query 1 refined to import contexts, document-internal connections
    chosen, materialized: the running-example result set."""
    from searchcube.connection_summary import summarize_connections
    from searchcube.context_summary import apply_context_selection, context_buckets
    from searchcube.dataguide import build_guides
    from searchcube.materializer import materialize
    from searchcube.query_model import parse_query
    from searchcube.topk_engine import top_k

    query = parse_query(QUERY_1)
    buckets = context_buckets(index, query)
    query = apply_context_selection(
        query,
        buckets,
        {0: frozenset({COUNTRY}), 1: frozenset({IMPORT_TC}), 2: frozenset({IMPORT_PCT})},
    )
    guides = build_guides(store, threshold=0.4)
    topk = top_k(store, index, query, k=10)
    summary = summarize_connections(store, guides, topk)
    c01 = find_connection(summary, 0, 1, lambda c: tree_steps_only(c) and c.length == 4)
    c02 = find_connection(summary, 0, 2, lambda c: tree_steps_only(c) and c.length == 4)
    c12 = find_connection(summary, 1, 2, lambda c: tree_steps_only(c) and c.length == 2)
    query = query.with_connections(frozenset({c01.id, c02.id, c12.id}))
    result = materialize(store, index, query, summary.connections)
    return query, summary, result


@pytest.fixture(scope="session")
def walkthrough_result(factbook_store, factbook_index):
    return materialize_walkthrough(factbook_store, factbook_index)


def find_connection(summary, i: int, j: int, predicate) -> Connection:
    matches = [c for c in summary.for_pair(i, j) if predicate(c)]
    assert matches, f"no connection for pair ({i},{j}) satisfying predicate"
    return matches[0]


def tree_steps_only(conn: Connection) -> bool:
    return all(s[0] in ("up", "down") for s in conn.steps)


def write_corpus(tmp_path: Path, docs: dict[str, str]) -> Path:
    target = tmp_path / "xml"
    target.mkdir(parents=True, exist_ok=True)
    for name, text in docs.items():
        (target / name).write_text(text, encoding="utf-8")
    return target
