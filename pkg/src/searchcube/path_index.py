"""Full-text index over the corpus.

Two views are maintained. The path view treats every distinct context path
as a virtual document: each term (content word or tag name) maps to the
paths it occurs on, and a side table keyed by path holds the
keyword-irrespective path statistics (document frequency, node count). The
node view supports ranked scans: nodes matching an expression stream out
in descending content-score order, with random access by node id, which is
what threshold-style top-k search needs.
"""

from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .corpus_store import ContextPath, CorpusStore, DeweyId, search_tokens
from .search_expr import Expr, node_score
INDEX_FILE = "index.json"


class PathIndexError(Exception):
    pass


class InvalidQueryError(PathIndexError):
    pass


@dataclass(frozen=True)
class PathEntry:
    path: ContextPath
    doc_frequency: int
    occurrence: int


@dataclass(frozen=True)
class PathPosting:
    term: str
    entries: tuple[PathEntry, ...]


@dataclass
class IndexStats:
    term_count: int
    posting_entries: int
    max_posting: int

    def render(self) -> str:
        return (
            f"terms\t{self.term_count}\n"
            f"posting_entries\t{self.posting_entries}\n"
            f"max_posting\t{self.max_posting}"
        )


class PathIndex:
    def __init__(self, store: CorpusStore):
        self.store = store
        # term -> {path -> count of nodes on path whose text or name has it}
        self._postings: dict[str, dict[ContextPath, int]] = {}
        self._node_tokens: dict[DeweyId, tuple[str, ...]] = {}
        self.stats: IndexStats | None = None

    # -- build ----------------------------------------------------------

    @classmethod
    def build(cls, store: CorpusStore) -> "PathIndex":
        index = cls(store)
        postings: dict[str, dict[ContextPath, int]] = {}
        for node_id in sorted(store.nodes):
            node = store.nodes[node_id]
            tokens = search_tokens(node)
            index._node_tokens[node_id] = tokens
            for term in set(tokens):
                bucket = postings.setdefault(term, {})
                bucket[node.context] = bucket.get(node.context, 0) + 1
        index._postings = postings
        entries = sum(len(b) for b in postings.values())
        index.stats = IndexStats(
            term_count=len(postings),
            posting_entries=entries,
            max_posting=max((len(b) for b in postings.values()), default=0),
        )
        return index

    # -- path-level access -----------------------------------------------

    def posting(self, term: str) -> PathPosting:
        bucket = self._postings.get(term.lower(), {})
        entries = tuple(
            PathEntry(path, self.store.path_stats[path][0], occ)
            for path, occ in sorted(bucket.items())
        )
        return PathPosting(term.lower(), entries)

    def paths_for(
        self, search: Expr | None, name_hint: str | None = None
    ) -> list[PathEntry]:
        """Distinct context paths whose nodes satisfy the expression,
        restricted to paths whose leaf name matches the hint when given.
        occurrence counts the satisfying nodes on each path."""
        if search is None and not name_hint:
            raise InvalidQueryError("need a search expression or a name hint")
        counts: dict[ContextPath, int] = {}
        for node_id, _score in self.scan_nodes(search, None, name_hint=name_hint):
            path = self.store.nodes[node_id].context
            counts[path] = counts.get(path, 0) + 1
        return [
            PathEntry(path, self.store.path_stats[path][0], occ)
            for path, occ in sorted(counts.items())
        ]

    # -- node-level access -------------------------------------------------

    def tokens_of(self, node_id: DeweyId) -> tuple[str, ...]:
        return self._node_tokens.get(node_id, ())

    def score_of(self, node_id: DeweyId, search: Expr) -> float:
        """Random access: content score of one node (0.0 when no match)."""
        return node_score(search, self.tokens_of(node_id))

    def scan_nodes(
        self,
        search: Expr | None,
        context_filter: Iterable[ContextPath] | None = None,
        name_hint: str | None = None,
    ) -> Iterator[tuple[DeweyId, float]]:
        """Sorted access: (node id, content score) in descending score
        order, ties by node id. Each call returns an independent cursor."""
        candidates: Iterable[DeweyId]
        if context_filter is not None:
            paths = sorted(ContextPath.of(p) for p in context_filter)
            candidates = (n for p in paths for n in self.store.nodes_at(p))
        else:
            candidates = sorted(self._node_tokens)
        hint = None if not name_hint else name_hint
        scored: list[tuple[float, DeweyId]] = []
        for node_id in candidates:
            if hint is not None and not _name_matches(self.store.nodes[node_id].name, hint):
                continue
            if search is None:
                score = 1.0
            else:
                score = node_score(search, self._node_tokens.get(node_id, ()))
                if score == 0.0:
                    continue
            scored.append((score, node_id))
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        return iter((node_id, score) for score, node_id in scored)

    # -- persistence --------------------------------------------------------

    def save(self, store_dir: str | Path) -> None:
        doc = {
            "postings": {
                term: {str(p): occ for p, occ in sorted(bucket.items())}
                for term, bucket in sorted(self._postings.items())
            },
            "stats": {
                "term_count": self.stats.term_count,
                "posting_entries": self.stats.posting_entries,
                "max_posting": self.stats.max_posting,
            },
        }
        (Path(store_dir) / INDEX_FILE).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def open(cls, store: CorpusStore, store_dir: str | Path) -> "PathIndex":
        path = Path(store_dir) / INDEX_FILE
        if not path.exists():
            raise PathIndexError(f"index not built in {store_dir}")
        doc = json.loads(path.read_text(encoding="utf-8"))
        index = cls(store)
        index._postings = {
            term: {ContextPath.of(p): occ for p, occ in bucket.items()}
            for term, bucket in doc["postings"].items()
        }
        for node_id in sorted(store.nodes):
            index._node_tokens[node_id] = search_tokens(store.nodes[node_id])
        index.stats = IndexStats(**doc["stats"])
        return index


def _name_matches(name: str, hint: str) -> bool:
    if "*" in hint:
        return fnmatch.fnmatchcase(name, hint)
    return name == hint
