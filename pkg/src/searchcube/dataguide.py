"""Merged dataguides: path-set summaries of documents plus cross-guide
link edges, the structural substrate for connection discovery.

Each document's summary is its set of full root-to-leaf paths. Building
walks documents in ordinal order: a path set that is a subset of (or equal
to) an existing guide is absorbed; otherwise it merges into the first
best-overlapping guide at or above the threshold (path union); otherwise
it founds a new guide. overlap(g1, g2) is
min(|common| / |paths(g1)|, |common| / |paths(g2)|). A threshold above 1.0
acts as the merging-disabled sentinel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus_store import ContextPath, CorpusStore

GUIDES_FILE = "guides.json"


class GuideError(Exception):
    pass


class CoverageError(GuideError):
    """A corpus path failed to locate in any guide (invariant breach)."""


def overlap(paths1: frozenset[ContextPath], paths2: frozenset[ContextPath]) -> float:
    if not paths1 or not paths2:
        raise GuideError("dataguides always contain at least one path")
    common = len(paths1 & paths2)
    return min(common / len(paths1), common / len(paths2))


@dataclass
class Dataguide:
    id: int
    paths: frozenset[ContextPath]
    member_docs: frozenset[int]

    def __post_init__(self) -> None:
        self._prefixes: frozenset[ContextPath] | None = None

    def tree_nodes(self) -> frozenset[ContextPath]:
        """Every distinct prefix of the guide's root-to-leaf paths."""
        if self._prefixes is None:
            found: set[ContextPath] = set()
            for path in self.paths:
                for i in range(1, len(path.segments) + 1):
                    found.add(ContextPath(path.segments[:i]))
            self._prefixes = frozenset(found)
        return self._prefixes

    def contains(self, path: ContextPath) -> bool:
        return path in self.tree_nodes()

    def children_of(self, path: ContextPath) -> list[ContextPath]:
        want = len(path.segments) + 1
        return sorted(
            n for n in self.tree_nodes()
            if len(n.segments) == want and path.is_prefix_of(n)
        )


@dataclass(frozen=True, order=True)
class GuideLink:
    from_guide: int
    from_path: ContextPath
    to_guide: int
    to_path: ContextPath
    kind: str
    label: str = ""


@dataclass
class GuideSet:
    guides: list[Dataguide]
    links: list[GuideLink]
    threshold: float
    doc_guide: dict[int, int] = field(default_factory=dict)

    def locate(self, path: ContextPath | str) -> list[tuple[int, ContextPath]]:
        """Guides whose tree contains the path. An empty answer violates
        the coverage invariant for corpus paths."""
        target = ContextPath.of(path)
        return [(g.id, target) for g in self.guides if g.contains(target)]

    def locate_or_fail(self, path: ContextPath | str) -> list[tuple[int, ContextPath]]:
        hits = self.locate(path)
        if not hits:
            raise CoverageError(f"path {path} is not covered by any dataguide")
        return hits

    def guide(self, guide_id: int) -> Dataguide:
        return self.guides[guide_id]

    def stats(self) -> dict:
        return {
            "guides": len(self.guides),
            "threshold": self.threshold,
            "links": len(self.links),
            "per_guide": [
                {
                    "id": g.id,
                    "documents": len(g.member_docs),
                    "leaf_paths": len(g.paths),
                    "tree_nodes": len(g.tree_nodes()),
                }
                for g in self.guides
            ],
        }

    def render_stats(self) -> str:
        lines = [
            f"guides\t{len(self.guides)}",
            f"threshold\t{self.threshold}",
            f"links\t{len(self.links)}",
            "guide\tdocuments\tleaf_paths\ttree_nodes",
        ]
        for g in self.guides:
            lines.append(f"{g.id}\t{len(g.member_docs)}\t{len(g.paths)}\t{len(g.tree_nodes())}")
        return "\n".join(lines)

    # -- guide graph -----------------------------------------------------

    def graph_neighbors(
        self, node: tuple[int, ContextPath]
    ) -> list[tuple[tuple[int, ContextPath], tuple]]:
        """Adjacent guide-graph nodes with the step that reaches them:
        tree edges as ("up"/"down", name), links as
        ("link", kind, label, str(target path))."""
        guide_id, path = node
        guide = self.guides[guide_id]
        out: list[tuple[tuple[int, ContextPath], tuple]] = []
        parent = path.parent()
        if parent is not None and parent.segments and guide.contains(parent):
            out.append(((guide_id, parent), ("up", parent.leaf)))
        for child in guide.children_of(path):
            out.append(((guide_id, child), ("down", child.leaf)))
        for link in self.links:
            if link.from_guide == guide_id and link.from_path == path:
                target = (link.to_guide, link.to_path)
                out.append((target, ("link", link.kind, link.label, str(link.to_path))))
            if link.to_guide == guide_id and link.to_path == path:
                target = (link.from_guide, link.from_path)
                out.append((target, ("link", link.kind, link.label, str(link.from_path))))
        return out

    # -- persistence -------------------------------------------------------

    def save(self, store_dir: str | Path) -> None:
        doc = {
            "threshold": self.threshold,
            "guides": [
                {
                    "id": g.id,
                    "paths": sorted(str(p) for p in g.paths),
                    "member_docs": sorted(g.member_docs),
                }
                for g in self.guides
            ],
            "links": [
                {
                    "from_guide": l.from_guide,
                    "from_path": str(l.from_path),
                    "to_guide": l.to_guide,
                    "to_path": str(l.to_path),
                    "kind": l.kind,
                    "label": l.label,
                }
                for l in self.links
            ],
        }
        (Path(store_dir) / GUIDES_FILE).write_text(json.dumps(doc, indent=1), encoding="utf-8")

    @classmethod
    def open(cls, store_dir: str | Path) -> "GuideSet":
        path = Path(store_dir) / GUIDES_FILE
        if not path.exists():
            raise GuideError(f"dataguides not built in {store_dir}")
        doc = json.loads(path.read_text(encoding="utf-8"))
        guides = [
            Dataguide(
                id=g["id"],
                paths=frozenset(ContextPath.of(p) for p in g["paths"]),
                member_docs=frozenset(g["member_docs"]),
            )
            for g in doc["guides"]
        ]
        links = [
            GuideLink(
                from_guide=l["from_guide"],
                from_path=ContextPath.of(l["from_path"]),
                to_guide=l["to_guide"],
                to_path=ContextPath.of(l["to_path"]),
                kind=l["kind"],
                label=l["label"],
            )
            for l in doc["links"]
        ]
        gs = cls(guides=guides, links=links, threshold=doc["threshold"])
        for g in guides:
            for d in g.member_docs:
                gs.doc_guide[d] = g.id
        return gs


MERGING_DISABLED = 1.5  # any threshold above 1.0 disables overlap merging


def build_guides(store: CorpusStore, threshold: float = 0.4) -> GuideSet:
    """Summarize every document and lift non-tree edges to guide links.
    Cost is linear in documents times guides (one scan per document)."""
    guides: list[Dataguide] = []
    path_sets: list[set[ContextPath]] = []
    members: list[set[int]] = []
    for ordinal in range(len(store.doc_names)):
        doc_paths = set(store.leaf_paths_of_doc(ordinal))
        placed = False
        for gi in range(len(guides)):
            if doc_paths <= path_sets[gi]:
                members[gi].add(ordinal)
                placed = True
                break
        if placed:
            continue
        best_gi = -1
        best = -1.0
        for gi in range(len(guides)):
            ov = overlap(frozenset(doc_paths), frozenset(path_sets[gi]))
            if ov > best:
                best, best_gi = ov, gi
        if best_gi >= 0 and best >= threshold:
            path_sets[best_gi] |= doc_paths
            members[best_gi].add(ordinal)
        else:
            guides.append(Dataguide(len(guides), frozenset(), frozenset()))
            path_sets.append(set(doc_paths))
            members.append({ordinal})
    final = [
        Dataguide(i, frozenset(path_sets[i]), frozenset(members[i]))
        for i in range(len(guides))
    ]
    doc_guide: dict[int, int] = {}
    for g in final:
        for d in g.member_docs:
            doc_guide[d] = g.id
    links: set[GuideLink] = set()
    for edge in store.link_edges:
        from_node = store.nodes[edge.from_id]
        to_node = store.nodes[edge.to_id]
        links.add(
            GuideLink(
                from_guide=doc_guide[edge.from_id.doc],
                from_path=from_node.context,
                to_guide=doc_guide[edge.to_id.doc],
                to_path=to_node.context,
                kind=edge.kind,
                label=edge.label,
            )
        )
    gs = GuideSet(guides=final, links=sorted(links), threshold=threshold, doc_guide=doc_guide)
    return gs


def check_coverage(store: CorpusStore, gs: GuideSet) -> None:
    """Every distinct corpus path must locate in at least one guide."""
    for path in store.paths():
        gs.locate_or_fail(path)
