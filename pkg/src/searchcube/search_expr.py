"""Full-text search expressions: bags of keywords, quoted phrases, and
boolean combinations, plus the match-anything "*" that imposes no content
constraint.

Expressions evaluate against a node's token sequence. Scores are
normalized term frequencies in [0, 1]; a phrase scores the minimum of its
member terms, AND takes the minimum of its operands, OR the maximum, and
NOT/match-anything contribute a neutral 1.0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .text import tokenize


class SearchSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class Expr:
    def matches(self, tokens: Sequence[str]) -> bool:
        raise NotImplementedError

    def score(self, tokens: Sequence[str]) -> float:
        raise NotImplementedError

    def render(self) -> str:
        raise NotImplementedError

    def words(self) -> frozenset[str]:
        """Every word the expression mentions (for index statistics)."""
        return frozenset()

    @property
    def is_match_any(self) -> bool:
        return isinstance(self, MatchAny)


@dataclass(frozen=True)
class MatchAny(Expr):
    def matches(self, tokens: Sequence[str]) -> bool:
        return True

    def score(self, tokens: Sequence[str]) -> float:
        return 1.0

    def render(self) -> str:
        return "*"


@dataclass(frozen=True)
class Word(Expr):
    term: str

    def matches(self, tokens: Sequence[str]) -> bool:
        return self.term in tokens

    def score(self, tokens: Sequence[str]) -> float:
        if not tokens:
            return 0.0
        return tokens.count(self.term) / len(tokens)

    def render(self) -> str:
        return self.term

    def words(self) -> frozenset[str]:
        return frozenset({self.term})


@dataclass(frozen=True)
class Phrase(Expr):
    terms: tuple[str, ...]

    def matches(self, tokens: Sequence[str]) -> bool:
        n = len(self.terms)
        return any(tuple(tokens[i : i + n]) == self.terms for i in range(len(tokens) - n + 1))

    def score(self, tokens: Sequence[str]) -> float:
        if not self.matches(tokens):
            return 0.0
        return min(Word(t).score(tokens) for t in self.terms)

    def render(self) -> str:
        return '"' + " ".join(self.terms) + '"'

    def words(self) -> frozenset[str]:
        return frozenset(self.terms)


@dataclass(frozen=True)
class And(Expr):
    operands: tuple[Expr, ...]

    def matches(self, tokens: Sequence[str]) -> bool:
        return all(op.matches(tokens) for op in self.operands)

    def score(self, tokens: Sequence[str]) -> float:
        return min(op.score(tokens) for op in self.operands)

    def render(self) -> str:
        return " AND ".join(op.render() for op in self.operands)

    def words(self) -> frozenset[str]:
        return frozenset().union(*(op.words() for op in self.operands))


@dataclass(frozen=True)
class Or(Expr):
    operands: tuple[Expr, ...]

    def matches(self, tokens: Sequence[str]) -> bool:
        return any(op.matches(tokens) for op in self.operands)

    def score(self, tokens: Sequence[str]) -> float:
        return max(op.score(tokens) for op in self.operands)

    def render(self) -> str:
        parts = []
        for op in self.operands:
            text = op.render()
            if isinstance(op, And):
                text = f"({text})"
            parts.append(text)
        return " OR ".join(parts)

    def words(self) -> frozenset[str]:
        return frozenset().union(*(op.words() for op in self.operands))


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr

    def matches(self, tokens: Sequence[str]) -> bool:
        return not self.operand.matches(tokens)

    def score(self, tokens: Sequence[str]) -> float:
        return 1.0 if self.matches(tokens) else 0.0

    def render(self) -> str:
        inner = self.operand.render()
        if isinstance(self.operand, (And, Or)):
            inner = f"({inner})"
        return f"NOT {inner}"

    def words(self) -> frozenset[str]:
        return self.operand.words()


def node_score(expr: Expr, tokens: Sequence[str]) -> float:
    """Content score of a node for an expression; 0.0 when it does not
    match, otherwise in (0, 1]."""
    if not expr.matches(tokens):
        return 0.0
    return max(expr.score(tokens), 1e-9)


# -- parsing ------------------------------------------------------------

_OPERATORS = {"AND", "OR", "NOT", "∧", "∨", "¬"}


def _lex(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == '"':
            end = text.find('"', i + 1)
            if end < 0:
                raise SearchSyntaxError("unterminated phrase", i)
            tokens.append(("phrase", text[i + 1 : end], i))
            i = end + 1
        elif ch in "()":
            tokens.append((ch, ch, i))
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in '()"':
                j += 1
            word = text[i:j]
            if word in _OPERATORS:
                kind = {"∧": "AND", "∨": "OR", "¬": "NOT"}.get(word, word)
                tokens.append((kind, word, i))
            else:
                tokens.append(("word", word, i))
            i = j
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]], length: int):
        self.tokens = tokens
        self.pos = 0
        self.length = length

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise SearchSyntaxError("unexpected end of expression", self.length)
        self.pos += 1
        return tok

    def parse_or(self) -> Expr:
        parts = [self.parse_and()]
        while (tok := self.peek()) and tok[0] == "OR":
            self.take()
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_and(self) -> Expr:
        parts = [self.parse_not()]
        while (tok := self.peek()) is not None:
            if tok[0] == "AND":
                self.take()
                parts.append(self.parse_not())
            elif tok[0] in {"word", "phrase", "(", "NOT"}:
                # Adjacent atoms form a bag of keywords (implicit AND).
                parts.append(self.parse_not())
            else:
                break
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_not(self) -> Expr:
        tok = self.peek()
        if tok and tok[0] == "NOT":
            self.take()
            return Not(self.parse_not())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        kind, value, pos = self.take()
        if kind == "(":
            inner = self.parse_or()
            closing = self.peek()
            if closing is None or closing[0] != ")":
                raise SearchSyntaxError("expected )", pos)
            self.take()
            return inner
        if kind == "phrase":
            terms = tuple(tokenize(value))
            if not terms:
                raise SearchSyntaxError("empty phrase", pos)
            return Phrase(terms) if len(terms) > 1 else Word(terms[0])
        if kind == "word":
            if value == "*":
                return MatchAny()
            terms = tokenize(value)
            if not terms:
                raise SearchSyntaxError(f"not a searchable token: {value!r}", pos)
            if len(terms) == 1:
                return Word(terms[0])
            return Phrase(tuple(terms))
        raise SearchSyntaxError(f"unexpected {value!r}", pos)


def parse_search(text: str) -> Expr:
    """Parse a search expression; raises SearchSyntaxError on bad input."""
    stripped = text.strip()
    if stripped == "*":
        return MatchAny()
    tokens = _lex(text)
    if not tokens:
        raise SearchSyntaxError("empty search expression", 0)
    parser = _Parser(tokens, len(text))
    expr = parser.parse_or()
    if parser.peek() is not None:
        raise SearchSyntaxError(f"trailing input {parser.peek()[1]!r}", parser.peek()[2])
    return expr
