"""Query representation and term-satisfaction predicates.

A query is an ordered list of (context, search) terms. A node satisfies a
term when its text satisfies the search expression and its name or path
matches the context: an empty context matches anything, a name pattern
(glob wildcards allowed) matches the node name, a full path must equal the
node's context exactly, and a disjunction matches when any branch does.
"""

from __future__ import annotations

import fnmatch
import re
from dataclasses import dataclass, replace

from .corpus_store import ContextPath, DataNode, search_tokens
from .search_expr import Expr, parse_search
from .text import canon_name

MAX_TERMS = 8


class QuerySyntaxError(ValueError):
    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class InvalidSelectionError(ValueError):
    pass


# -- context specs -------------------------------------------------------


@dataclass(frozen=True)
class EmptyContext:
    def matches(self, node: DataNode) -> bool:
        return True

    def render(self) -> str:
        return "*"


@dataclass(frozen=True)
class FullPath:
    path: ContextPath

    def matches(self, node: DataNode) -> bool:
        return node.context == self.path

    def render(self) -> str:
        return str(self.path)


@dataclass(frozen=True)
class NamePattern:
    pattern: str  # canonical name, may contain * wildcards

    def matches(self, node: DataNode) -> bool:
        if "*" in self.pattern:
            return fnmatch.fnmatchcase(node.name, self.pattern)
        return node.name == self.pattern

    def render(self) -> str:
        return self.pattern.replace("_", " ")


@dataclass(frozen=True)
class Disjunction:
    branches: tuple[FullPath | NamePattern, ...]

    def __post_init__(self) -> None:
        if not self.branches:
            raise QuerySyntaxError("empty disjunction")

    def matches(self, node: DataNode) -> bool:
        return any(b.matches(node) for b in self.branches)

    def render(self) -> str:
        return " | ".join(b.render() for b in self.branches)


ContextSpec = EmptyContext | FullPath | NamePattern | Disjunction


@dataclass(frozen=True)
class QueryTerm:
    context: ContextSpec
    search: Expr

    def render(self) -> str:
        return f"({self.context.render()}, {self.search.render()})"


@dataclass(frozen=True)
class Refinement:
    """User selections: per-term context paths and chosen connection ids."""

    selected_contexts: tuple[frozenset[ContextPath] | None, ...] = ()
    selected_connections: frozenset[str] | None = None

    def contexts_for(self, term_index: int) -> frozenset[ContextPath] | None:
        if term_index < len(self.selected_contexts):
            return self.selected_contexts[term_index]
        return None


@dataclass(frozen=True)
class Query:
    terms: tuple[QueryTerm, ...]
    refinement: Refinement | None = None

    def __post_init__(self) -> None:
        if not self.terms:
            raise QuerySyntaxError("a query needs at least one term")
        if len(self.terms) > MAX_TERMS:
            raise QuerySyntaxError(f"too many terms (max {MAX_TERMS})")

    def render(self) -> str:
        return " AND ".join(t.render() for t in self.terms)

    def with_contexts(self, selections: tuple[frozenset[ContextPath] | None, ...]) -> "Query":
        base = self.refinement or Refinement()
        # Revising contexts invalidates any downstream connection choice.
        return replace(self, refinement=replace(base, selected_contexts=selections,
                                                selected_connections=None))

    def with_connections(self, chosen: frozenset[str]) -> "Query":
        base = self.refinement or Refinement()
        return replace(self, refinement=replace(base, selected_connections=chosen))


# -- satisfaction ---------------------------------------------------------


def satisfies(node: DataNode, term: QueryTerm) -> bool:
    """Search satisfaction over the node's searchable tokens (name plus
    direct text) combined with the context check."""
    if not term.context.matches(node):
        return False
    return term.search.matches(search_tokens(node))


def allowed_paths(query: Query, term_index: int) -> frozenset[ContextPath] | None:
    if query.refinement is None:
        return None
    return query.refinement.contexts_for(term_index)


def term_admits(query: Query, term_index: int, node: DataNode) -> bool:
    """satisfies() plus any context refinement on the term."""
    if not satisfies(node, query.terms[term_index]):
        return False
    allowed = allowed_paths(query, term_index)
    return allowed is None or node.context in allowed


# -- parsing --------------------------------------------------------------

_TERM_SPLIT = re.compile(r"\s+(?:AND|∧)\s+")


def _split_terms(text: str) -> list[tuple[str, int]]:
    """Split on AND between closing and opening parens, tracking offsets."""
    parts: list[tuple[str, int]] = []
    depth = 0
    in_quote = False
    start = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == '"':
            in_quote = not in_quote
        elif not in_quote:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif depth == 0:
                m = _TERM_SPLIT.match(text, i)
                if m and i > start:
                    parts.append((text[start:i], start))
                    i = m.end()
                    start = i
                    continue
        i += 1
    parts.append((text[start:], start))
    return parts


def parse_context(text: str) -> ContextSpec:
    stripped = text.strip()
    if stripped in {"", "*"}:
        return EmptyContext()
    if "|" in stripped:
        branches = []
        for part in stripped.split("|"):
            branch = parse_context(part)
            if isinstance(branch, (EmptyContext, Disjunction)):
                raise QuerySyntaxError(f"bad disjunction branch: {part.strip()!r}")
            branches.append(branch)
        return Disjunction(tuple(branches))
    if "/" in stripped:
        if "*" in stripped:
            raise QuerySyntaxError("wildcards are not allowed inside a full path context")
        return FullPath(ContextPath.of(stripped))
    return NamePattern(canon_name(stripped))


def parse_query(text: str, max_terms: int = MAX_TERMS) -> Query:
    """Parse the surface form: (context, search) terms joined by AND."""
    if not text.strip():
        raise QuerySyntaxError("empty query")
    terms: list[QueryTerm] = []
    for part, offset in _split_terms(text):
        part = part.strip()
        if not (part.startswith("(") and part.endswith(")")):
            raise QuerySyntaxError(f"expected (context, search), got {part!r}", offset)
        body = part[1:-1]
        depth = 0
        in_quote = False
        comma = -1
        for i, ch in enumerate(body):
            if ch == '"':
                in_quote = not in_quote
            elif in_quote:
                continue
            elif ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                comma = i
                break
        if comma < 0:
            raise QuerySyntaxError("term needs a comma between context and search", offset)
        context = parse_context(body[:comma])
        search_text = body[comma + 1 :].strip()
        if not search_text:
            raise QuerySyntaxError("missing search expression", offset + comma)
        search = parse_search(search_text)
        if isinstance(context, EmptyContext) and search.is_match_any:
            raise QuerySyntaxError("term has neither a context nor a search constraint", offset)
        terms.append(QueryTerm(context, search))
    if len(terms) > max_terms:
        raise QuerySyntaxError(f"too many terms (max {max_terms})")
    return Query(tuple(terms))


def query_to_dict(query: Query) -> dict:
    def context_dict(spec: ContextSpec) -> dict:
        if isinstance(spec, EmptyContext):
            return {"kind": "empty"}
        if isinstance(spec, FullPath):
            return {"kind": "path", "path": str(spec.path)}
        if isinstance(spec, NamePattern):
            return {"kind": "name", "pattern": spec.pattern}
        return {"kind": "any_of", "branches": [context_dict(b) for b in spec.branches]}

    return {
        "text": query.render(),
        "terms": [
            {"context": context_dict(t.context), "search": t.search.render()}
            for t in query.terms
        ],
    }


def query_from_dict(raw: dict) -> Query:
    """Structured form: {"terms": [{"context": {...}, "search": "..."}]}."""

    def context_from(raw_ctx: dict) -> ContextSpec:
        kind = raw_ctx.get("kind", "empty")
        if kind == "empty":
            return EmptyContext()
        if kind == "path":
            return FullPath(ContextPath.of(raw_ctx["path"]))
        if kind == "name":
            return NamePattern(canon_name(raw_ctx["pattern"]))
        if kind == "any_of":
            return Disjunction(tuple(context_from(b) for b in raw_ctx["branches"]))
        raise QuerySyntaxError(f"unknown context kind: {kind!r}")

    if "terms" not in raw:
        return parse_query(raw["text"])
    terms = tuple(
        QueryTerm(context_from(t["context"]), parse_search(t["search"])) for t in raw["terms"]
    )
    return Query(terms)
