"""Per-term context buckets: every distinct path a query term occurs on
across the whole collection, with collection-wide path frequencies.

Displayed frequency is the path's document frequency irrespective of the
keyword (the structural view); the keyword-conditioned occurrence count is
kept alongside for tooltips but is not the sort key.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus_store import ContextPath
from .path_index import PathEntry, PathIndex
from .query_model import (
    Disjunction,
    EmptyContext,
    FullPath,
    InvalidSelectionError,
    NamePattern,
    Query,
)


@dataclass(frozen=True)
class ContextBucket:
    term_index: int
    entries: tuple[PathEntry, ...]  # sorted by descending path frequency

    def paths(self) -> frozenset[ContextPath]:
        return frozenset(e.path for e in self.entries)


def _entries_for_term(index: PathIndex, query: Query, term_index: int) -> list[PathEntry]:
    term = query.terms[term_index]
    search = None if term.search.is_match_any else term.search
    context = term.context
    if isinstance(context, EmptyContext):
        return index.paths_for(term.search if search is None else search, None)
    if isinstance(context, NamePattern):
        return index.paths_for(search, name_hint=context.pattern)
    if isinstance(context, FullPath):
        # Probe with the last tag name, then keep the exact path.
        probed = index.paths_for(search, name_hint=context.path.leaf)
        return [e for e in probed if e.path == context.path]
    assert isinstance(context, Disjunction)
    merged: dict[ContextPath, PathEntry] = {}
    for branch in context.branches:
        if isinstance(branch, FullPath):
            sub = [
                e
                for e in index.paths_for(search, name_hint=branch.path.leaf)
                if e.path == branch.path
            ]
        else:
            sub = index.paths_for(search, name_hint=branch.pattern)
        for entry in sub:
            merged[entry.path] = entry
    return list(merged.values())


def context_buckets(index: PathIndex, query: Query) -> list[ContextBucket]:
    """One bucket per term, entries sorted by descending document
    frequency, ties broken by path string."""
    buckets = []
    for i in range(len(query.terms)):
        entries = _entries_for_term(index, query, i)
        entries.sort(key=lambda e: (-e.doc_frequency, str(e.path)))
        buckets.append(ContextBucket(i, tuple(entries)))
    return buckets


def apply_context_selection(
    query: Query,
    buckets: list[ContextBucket],
    selections: dict[int, frozenset[ContextPath]],
) -> Query:
    """Pin each term to a subset of its bucket; selecting a path outside
    the term's bucket is an error naming the term and path."""
    chosen: list[frozenset[ContextPath] | None] = [None] * len(query.terms)
    for term_index, paths in selections.items():
        if term_index < 0 or term_index >= len(query.terms):
            raise InvalidSelectionError(f"no such term: {term_index}")
        bucket_paths = buckets[term_index].paths()
        for path in paths:
            if path not in bucket_paths:
                raise InvalidSelectionError(
                    f"path {path} is not in term {term_index}'s context bucket"
                )
        chosen[term_index] = frozenset(paths)
    return query.with_contexts(tuple(chosen))


def render_buckets(buckets: list[ContextBucket], query: Query) -> str:
    lines = []
    for bucket in buckets:
        lines.append(f"term {bucket.term_index}: {query.terms[bucket.term_index].render()}")
        if not bucket.entries:
            lines.append("  (no matching contexts)")
        for e in bucket.entries:
            lines.append(f"  {e.path}\tdocs={e.doc_frequency}\tmatches={e.occurrence}")
    return "\n".join(lines)
