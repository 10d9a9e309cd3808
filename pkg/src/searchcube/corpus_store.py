"""Persistent data graph over an XML corpus.

Every element and attribute becomes a node identified by a Dewey id
(document ordinal + child-ordinal steps). Parent/child edges are implicit
in the Dewey structure; IDREF, XLink and value-based edges are materialized
from link specifications supplied at ingest time. After ingestion the store
is immutable and safe to share between concurrent readers.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .text import canon_name, normalize_ws

EDGE_KINDS = ("parent_child", "idref", "xlink", "value_based")
LINK_KINDS = ("idref", "xlink", "value_based")

STORE_FORMAT = 1


class StoreError(Exception):
    """Base class for corpus-store failures."""


class NodeNotFoundError(StoreError):
    pass


class DuplicateDocumentError(StoreError):
    pass


class BadLinkSpecError(StoreError):
    pass


@dataclass(frozen=True, order=True)
class DeweyId:
    """Hierarchical node identifier: document ordinal plus the child
    ordinals walked from the document root. Lexicographic order on
    (doc, steps) equals document order; ancestry is step-prefixing."""

    doc: int
    steps: tuple[int, ...] = ()

    def __str__(self) -> str:
        return f"{self.doc}:{'.'.join(str(s) for s in self.steps)}"

    @classmethod
    def parse(cls, text: str) -> "DeweyId":
        doc_part, _, step_part = text.partition(":")
        steps = tuple(int(s) for s in step_part.split(".") if s)
        return cls(int(doc_part), steps)

    def parent(self) -> "DeweyId | None":
        if not self.steps:
            return None
        return DeweyId(self.doc, self.steps[:-1])

    def is_ancestor_of(self, other: "DeweyId") -> bool:
        return (
            self.doc == other.doc
            and len(self.steps) < len(other.steps)
            and other.steps[: len(self.steps)] == self.steps
        )

    def child(self, ordinal: int) -> "DeweyId":
        return DeweyId(self.doc, self.steps + (ordinal,))


@dataclass(frozen=True, order=True)
class ContextPath:
    """Root-to-node path in canonical form ("/country/economy/gdp");
    attribute segments carry an "@" prefix. Canonicalization lowercases
    names and maps internal whitespace to underscores, and the string form
    round-trips to the segment tuple."""

    segments: tuple[str, ...]

    @classmethod
    def of(cls, value: "ContextPath | str | Iterable[str]") -> "ContextPath":
        if isinstance(value, ContextPath):
            return value
        if isinstance(value, str):
            parts = [p for p in value.split("/") if p]
        else:
            parts = list(value)
        return cls(tuple(canon_name(p) for p in parts))

    def __str__(self) -> str:
        return "/" + "/".join(self.segments)

    @property
    def leaf(self) -> str:
        return self.segments[-1] if self.segments else ""

    def parent(self) -> "ContextPath | None":
        if not self.segments:
            return None
        return ContextPath(self.segments[:-1])

    def child(self, name: str) -> "ContextPath":
        return ContextPath(self.segments + (canon_name(name),))

    def is_prefix_of(self, other: "ContextPath") -> bool:
        n = len(self.segments)
        return n <= len(other.segments) and other.segments[:n] == self.segments


@dataclass(frozen=True)
class DataNode:
    """One element or attribute of the data graph.

    text is the node's own (direct) text, whitespace-normalized; pieces
    keeps the direct text fragments in document order (leading text plus
    the tail after each child) so descendant concatenation can interleave
    them correctly with child content.
    """

    id: DeweyId
    kind: str  # "element" | "attribute"
    name: str
    context: ContextPath
    text: str
    pieces: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "attribute" and self.pieces and len(self.pieces) != 1:
            raise StoreError("attribute nodes carry a single text piece")


def search_tokens(node: "DataNode") -> tuple[str, ...]:
    """Tokens a node is searchable by: its tag/attribute name's tokens
    followed by its direct-text tokens. Keyword search sees tag names as
    well as content words."""
    from .text import tokenize

    return tuple(tokenize(node.name) + tokenize(node.text))


@dataclass(frozen=True, order=True)
class EdgeRecord:
    kind: str
    from_id: DeweyId
    to_id: DeweyId
    label: str = ""


@dataclass(frozen=True)
class LinkSpec:
    """Declarative non-tree relationship.

    kind=idref matches a ref attribute on source nodes against an id
    attribute on target nodes; kind=xlink does the same for href values
    (a leading "...#" fragment prefix is stripped); kind=value_based
    matches trimmed node text for equality, optionally case-folded.
    """

    kind: str
    source: ContextPath
    target: ContextPath
    label: str = ""
    ref_attribute: str = "ref"
    id_attribute: str = "id"
    href_attribute: str = "href"
    case_fold: bool = False

    def __post_init__(self) -> None:
        if self.kind not in LINK_KINDS:
            raise BadLinkSpecError(f"unknown link kind: {self.kind!r}")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "LinkSpec":
        return cls(
            kind=raw["kind"],
            source=ContextPath.of(raw["source"]),
            target=ContextPath.of(raw["target"]),
            label=raw.get("label", ""),
            ref_attribute=raw.get("ref_attribute", "ref"),
            id_attribute=raw.get("id_attribute", "id"),
            href_attribute=raw.get("href_attribute", "href"),
            case_fold=bool(raw.get("case_fold", False)),
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "source": str(self.source),
            "target": str(self.target),
            "label": self.label,
            "ref_attribute": self.ref_attribute,
            "id_attribute": self.id_attribute,
            "href_attribute": self.href_attribute,
            "case_fold": self.case_fold,
        }


@dataclass
class CorpusStats:
    documents: int
    nodes: int
    edges: dict[str, int]
    distinct_paths: int
    rejected: list[tuple[str, str]] = field(default_factory=list)
    link_matches: dict[str, int] = field(default_factory=dict)

    def render(self) -> str:
        lines = [
            f"documents\t{self.documents}",
            f"nodes\t{self.nodes}",
            f"distinct_paths\t{self.distinct_paths}",
        ]
        for kind in EDGE_KINDS:
            lines.append(f"edges[{kind}]\t{self.edges.get(kind, 0)}")
        for label in sorted(self.link_matches):
            lines.append(f"link_matches[{label}]\t{self.link_matches[label]}")
        for name, reason in self.rejected:
            lines.append(f"rejected\t{name}\t{reason}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "documents": self.documents,
            "nodes": self.nodes,
            "edges": self.edges,
            "distinct_paths": self.distinct_paths,
            "rejected": [list(r) for r in self.rejected],
            "link_matches": self.link_matches,
        }


class CorpusStore:
    """Immutable in-memory data graph with on-disk persistence."""

    def __init__(self) -> None:
        self.doc_names: list[str] = []
        self.nodes: dict[DeweyId, DataNode] = {}
        self.roots: list[DeweyId] = []
        self._children: dict[DeweyId, tuple[DeweyId, ...]] = {}
        self._by_path: dict[ContextPath, tuple[DeweyId, ...]] = {}
        self.link_edges: list[EdgeRecord] = []
        self._edges_by_node: dict[DeweyId, tuple[EdgeRecord, ...]] = {}
        self.path_stats: dict[ContextPath, tuple[int, int]] = {}
        self.link_specs: list[LinkSpec] = []
        self.stats: CorpusStats | None = None

    # -- ingestion -----------------------------------------------------

    @classmethod
    def ingest(
        cls,
        documents: Iterable[tuple[str, bytes]],
        links: Sequence[LinkSpec] = (),
    ) -> "CorpusStore":
        """Parse documents (name, raw bytes) into the graph and materialize
        link edges. Malformed documents are rejected individually with a
        position diagnostic; a repeated document name is an error."""
        store = cls()
        store.link_specs = list(links)
        rejected: list[tuple[str, str]] = []
        seen_names: set[str] = set()
        for name, raw in documents:
            if name in seen_names:
                raise DuplicateDocumentError(f"document ingested twice: {name}")
            seen_names.add(name)
            try:
                root = ET.fromstring(raw)
            except ET.ParseError as exc:
                line, col = exc.position
                rejected.append((name, f"line {line} column {col}: {exc.msg}"))
                continue
            ordinal = len(store.doc_names)
            store.doc_names.append(name)
            store._add_document(ordinal, root)
        store._finalize(rejected)
        return store

    def _add_document(self, ordinal: int, root: ET.Element) -> None:
        root_id = DeweyId(ordinal)
        self.roots.append(root_id)
        self._add_element(root_id, root, ContextPath(()))

    def _add_element(self, node_id: DeweyId, elem: ET.Element, parent_path: ContextPath) -> None:
        name = canon_name(elem.tag)
        path = parent_path.child(name)
        child_ids: list[DeweyId] = []
        ordinal = 0
        # Attributes come first, in canonical name order, as leaf nodes.
        for attr_raw in sorted(elem.attrib, key=canon_name):
            ordinal += 1
            attr_id = node_id.child(ordinal)
            value = normalize_ws(elem.attrib[attr_raw])
            attr_name = "@" + canon_name(attr_raw)
            self.nodes[attr_id] = DataNode(
                id=attr_id,
                kind="attribute",
                name=attr_name,
                context=path.child(attr_name),
                text=value,
                pieces=(value,),
            )
            self._children[attr_id] = ()
            child_ids.append(attr_id)
        pieces = [normalize_ws(elem.text or "")]
        element_children = list(elem)
        for child in element_children:
            ordinal += 1
            child_ids.append(node_id.child(ordinal))
            pieces.append(normalize_ws(child.tail or ""))
        direct = " ".join(p for p in pieces if p)
        self.nodes[node_id] = DataNode(
            id=node_id,
            kind="element",
            name=name,
            context=path,
            text=direct,
            pieces=tuple(pieces),
        )
        self._children[node_id] = tuple(child_ids)
        n_attrs = len(elem.attrib)
        for i, child in enumerate(element_children):
            self._add_element(node_id.child(n_attrs + i + 1), child, path)

    def _finalize(self, rejected: list[tuple[str, str]]) -> None:
        by_path: dict[ContextPath, list[DeweyId]] = {}
        for node_id in sorted(self.nodes):
            by_path.setdefault(self.nodes[node_id].context, []).append(node_id)
        self._by_path = {p: tuple(ids) for p, ids in by_path.items()}
        for path, ids in self._by_path.items():
            docs = {i.doc for i in ids}
            self.path_stats[path] = (len(docs), len(ids))
        link_matches = self._materialize_links()
        incident: dict[DeweyId, list[EdgeRecord]] = {}
        for edge in self.link_edges:
            incident.setdefault(edge.from_id, []).append(edge)
            incident.setdefault(edge.to_id, []).append(edge)
        self._edges_by_node = {n: tuple(sorted(es)) for n, es in incident.items()}
        edge_counts = {k: 0 for k in EDGE_KINDS}
        edge_counts["parent_child"] = len(self.nodes) - len(self.roots)
        for edge in self.link_edges:
            edge_counts[edge.kind] += 1
        self.stats = CorpusStats(
            documents=len(self.doc_names),
            nodes=len(self.nodes),
            edges=edge_counts,
            distinct_paths=len(self._by_path),
            rejected=rejected,
            link_matches=link_matches,
        )

    def _materialize_links(self) -> dict[str, int]:
        matches: dict[str, int] = {}
        edges: set[EdgeRecord] = set()
        for spec in self.link_specs:
            count = 0
            sources = self._by_path.get(spec.source, ())
            targets = self._by_path.get(spec.target, ())
            if spec.kind == "value_based":
                fold = (lambda s: s.casefold()) if spec.case_fold else (lambda s: s)
                by_value: dict[str, list[DeweyId]] = {}
                for t in targets:
                    value = fold(self.nodes[t].text.strip())
                    if value:
                        by_value.setdefault(value, []).append(t)
                for s in sources:
                    value = fold(self.nodes[s].text.strip())
                    if not value:
                        continue
                    for t in by_value.get(value, ()):
                        if s != t:
                            edges.add(EdgeRecord(spec.kind, s, t, spec.label))
                            count += 1
            else:
                attr = spec.ref_attribute if spec.kind == "idref" else spec.href_attribute
                by_id: dict[str, list[DeweyId]] = {}
                for t in targets:
                    value = self._attribute_value(t, spec.id_attribute)
                    if value:
                        by_id.setdefault(value, []).append(t)
                for s in sources:
                    value = self._attribute_value(s, attr)
                    if not value:
                        continue
                    if spec.kind == "xlink" and "#" in value:
                        value = value.rsplit("#", 1)[-1]
                    for t in by_id.get(value, ()):
                        if s != t:
                            edges.add(EdgeRecord(spec.kind, s, t, spec.label))
                            count += 1
            key = spec.label or f"{spec.kind}:{spec.source}->{spec.target}"
            matches[key] = count
        self.link_edges = sorted(edges)
        return matches

    def _attribute_value(self, node_id: DeweyId, attr_name: str) -> str | None:
        want = "@" + canon_name(attr_name)
        for child_id in self._children.get(node_id, ()):
            child = self.nodes[child_id]
            if child.kind == "attribute" and child.name == want:
                return child.text
        return None

    # -- lookups -------------------------------------------------------

    def node(self, node_id: DeweyId) -> DataNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise NodeNotFoundError(f"no such node: {node_id}") from None

    def children(self, node_id: DeweyId) -> tuple[DeweyId, ...]:
        self.node(node_id)
        return self._children.get(node_id, ())

    def nodes_at(self, path: ContextPath | str) -> tuple[DeweyId, ...]:
        return self._by_path.get(ContextPath.of(path), ())

    def paths(self) -> tuple[ContextPath, ...]:
        return tuple(sorted(self._by_path))

    def leaf_paths_of_doc(self, ordinal: int) -> frozenset[ContextPath]:
        """Full root-to-leaf paths of one document (leaves have no children)."""
        root = DeweyId(ordinal)
        found: set[ContextPath] = set()
        stack = [root]
        while stack:
            nid = stack.pop()
            kids = self._children.get(nid, ())
            if kids:
                stack.extend(kids)
            else:
                found.add(self.nodes[nid].context)
        return frozenset(found)

    def content(self, node_id: DeweyId) -> str:
        """Concatenation of all descendant text in document order, joined
        by single spaces; attribute values are not text nodes and are
        excluded."""
        node = self.node(node_id)
        parts: list[str] = []

        def walk(nid: DeweyId) -> None:
            n = self.nodes[nid]
            if n.kind == "attribute":
                return
            pieces = n.pieces or (n.text,)
            if pieces[0]:
                parts.append(pieces[0])
            elems = [c for c in self._children.get(nid, ()) if self.nodes[c].kind == "element"]
            for i, child in enumerate(elems):
                walk(child)
                if i + 1 < len(pieces) and pieces[i + 1]:
                    parts.append(pieces[i + 1])

        if node.kind == "attribute":
            return node.text
        walk(node_id)
        return " ".join(parts)

    def neighbors(
        self, node_id: DeweyId, kinds: Iterable[str]
    ) -> list[tuple[EdgeRecord, DataNode]]:
        """All incident edges of the requested kinds, both directions,
        ordered by kind then endpoint ids."""
        node = self.node(node_id)
        wanted = set(kinds)
        out: list[tuple[EdgeRecord, DataNode]] = []
        if "parent_child" in wanted:
            parent = node_id.parent()
            if parent is not None:
                out.append((EdgeRecord("parent_child", parent, node_id), self.nodes[parent]))
            for child in self._children.get(node_id, ()):
                out.append((EdgeRecord("parent_child", node_id, child), self.nodes[child]))
        for edge in self._edges_by_node.get(node_id, ()):
            if edge.kind in wanted:
                other = edge.to_id if edge.from_id == node_id else edge.from_id
                out.append((edge, self.nodes[other]))
        out.sort(key=lambda pair: (pair[0].kind, pair[0].from_id, pair[0].to_id, pair[0].label))
        return out

    def adjacent(self, node_id: DeweyId) -> tuple[DeweyId, ...]:
        """Undirected neighbor ids over every edge kind (graph traversal)."""
        out: list[DeweyId] = []
        parent = node_id.parent()
        if parent is not None:
            out.append(parent)
        out.extend(self._children.get(node_id, ()))
        for edge in self._edges_by_node.get(node_id, ()):
            out.append(edge.to_id if edge.from_id == node_id else edge.from_id)
        return tuple(sorted(set(out)))

    def link_edges_between(self, a: DeweyId, b: DeweyId) -> list[EdgeRecord]:
        return sorted(
            e
            for e in self._edges_by_node.get(a, ())
            if (e.from_id == a and e.to_id == b) or (e.from_id == b and e.to_id == a)
        )

    def edge_exists(self, a: DeweyId, b: DeweyId, kind: str, label: str) -> bool:
        if kind == "parent_child":
            return a.parent() == b or b.parent() == a
        return any(
            e.kind == kind and e.label == label for e in self.link_edges_between(a, b)
        )

    # -- persistence ---------------------------------------------------

    def save(self, store_dir: str | Path) -> None:
        root = Path(store_dir)
        root.mkdir(parents=True, exist_ok=True)
        assert self.stats is not None, "save() requires a finalized store"
        manifest = {
            "format": STORE_FORMAT,
            "documents": [{"ordinal": i, "name": n} for i, n in enumerate(self.doc_names)],
            "link_specs": [s.to_dict() for s in self.link_specs],
            "stats": self.stats.to_dict(),
        }
        (root / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
        with (root / "nodes.jsonl").open("w", encoding="utf-8") as fh:
            for node_id in sorted(self.nodes):
                n = self.nodes[node_id]
                fh.write(
                    json.dumps(
                        {
                            "d": n.id.doc,
                            "s": list(n.id.steps),
                            "k": n.kind[0],
                            "n": n.name,
                            "p": list(n.pieces),
                        }
                    )
                    + "\n"
                )
        with (root / "edges.jsonl").open("w", encoding="utf-8") as fh:
            for e in self.link_edges:
                fh.write(
                    json.dumps(
                        {"k": e.kind, "f": str(e.from_id), "t": str(e.to_id), "l": e.label}
                    )
                    + "\n"
                )
        paths_doc = {str(p): list(v) for p, v in sorted(self.path_stats.items())}
        (root / "paths.json").write_text(json.dumps(paths_doc, indent=1), encoding="utf-8")

    @classmethod
    def open(cls, store_dir: str | Path) -> "CorpusStore":
        root = Path(store_dir)
        manifest_path = root / "manifest.json"
        if not manifest_path.exists():
            raise StoreError(f"not a corpus store: {root}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        store = cls()
        store.doc_names = [d["name"] for d in manifest["documents"]]
        store.link_specs = [LinkSpec.from_dict(d) for d in manifest["link_specs"]]
        children: dict[DeweyId, list[DeweyId]] = {}
        contexts: dict[DeweyId, ContextPath] = {}
        with (root / "nodes.jsonl").open(encoding="utf-8") as fh:
            for line in fh:
                raw = json.loads(line)
                node_id = DeweyId(raw["d"], tuple(raw["s"]))
                kind = "element" if raw["k"] == "e" else "attribute"
                pieces = tuple(raw["p"])
                parent = node_id.parent()
                if parent is None:
                    context = ContextPath((raw["n"],))
                else:
                    context = ContextPath(contexts[parent].segments + (raw["n"],))
                    children.setdefault(parent, []).append(node_id)
                contexts[node_id] = context
                store.nodes[node_id] = DataNode(
                    id=node_id,
                    kind=kind,
                    name=raw["n"],
                    context=context,
                    text=" ".join(p for p in pieces if p),
                    pieces=pieces,
                )
                children.setdefault(node_id, [])
                if parent is None:
                    store.roots.append(node_id)
        store._children = {k: tuple(v) for k, v in children.items()}
        store.link_edges = []
        edges_path = root / "edges.jsonl"
        if edges_path.exists():
            with edges_path.open(encoding="utf-8") as fh:
                for line in fh:
                    raw = json.loads(line)
                    store.link_edges.append(
                        EdgeRecord(
                            raw["k"],
                            DeweyId.parse(raw["f"]),
                            DeweyId.parse(raw["t"]),
                            raw["l"],
                        )
                    )
        by_path: dict[ContextPath, list[DeweyId]] = {}
        for node_id in sorted(store.nodes):
            by_path.setdefault(store.nodes[node_id].context, []).append(node_id)
        store._by_path = {p: tuple(ids) for p, ids in by_path.items()}
        for path, ids in store._by_path.items():
            docs = {i.doc for i in ids}
            store.path_stats[path] = (len(docs), len(ids))
        incident: dict[DeweyId, list[EdgeRecord]] = {}
        for edge in store.link_edges:
            incident.setdefault(edge.from_id, []).append(edge)
            incident.setdefault(edge.to_id, []).append(edge)
        store._edges_by_node = {n: tuple(sorted(es)) for n, es in incident.items()}
        stats_raw = manifest["stats"]
        store.stats = CorpusStats(
            documents=stats_raw["documents"],
            nodes=stats_raw["nodes"],
            edges=stats_raw["edges"],
            distinct_paths=stats_raw["distinct_paths"],
            rejected=[tuple(r) for r in stats_raw["rejected"]],
            link_matches=stats_raw.get("link_matches", {}),
        )
        return store


def ingest_directory(
    xml_dir: str | Path, links: Sequence[LinkSpec] = ()
) -> CorpusStore:
    """Ingest every .xml file under a directory, in sorted-name order so
    document ordinals are stable across runs."""
    root = Path(xml_dir)
    files = sorted(p for p in root.glob("*.xml"))

    def docs() -> Iterator[tuple[str, bytes]]:
        for p in files:
            yield p.name, p.read_bytes()

    return CorpusStore.ingest(docs(), links)


def load_link_specs(path: str | Path) -> list[LinkSpec]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(raw, Mapping):
        raw = raw.get("links", [])
    return [LinkSpec.from_dict(item) for item in raw]
