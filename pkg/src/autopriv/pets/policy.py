"""Monotone purpose-policy formulas.

Grammar (no negation, AND binds tighter than OR, both left-associative):

    expr    := or_term
    or_term := and_term ("OR" and_term)*
    and_term:= primary ("AND" primary)*
    primary := ATTRIBUTE | "(" expr ")"

Attributes are lowercase tokens like ``purpose:poi-recommendation``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import PolicyParseError

_ATTR_RE = re.compile(r"^[a-z0-9_:.\-]+$")
_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


@dataclass(frozen=True)
class Attr:
    name: str

    def evaluate(self, attributes: frozenset[str] | set[str]) -> bool:
        return self.name in attributes

    def attributes(self) -> set[str]:
        return {self.name}

    def to_text(self) -> str:
        return self.name


@dataclass(frozen=True)
class And:
    children: tuple["PolicyNode", ...]

    def evaluate(self, attributes) -> bool:
        return all(c.evaluate(attributes) for c in self.children)

    def attributes(self) -> set[str]:
        out: set[str] = set()
        for c in self.children:
            out |= c.attributes()
        return out

    def to_text(self) -> str:
        parts = [f"({c.to_text()})" if isinstance(c, Or) else c.to_text()
                 for c in self.children]
        return " AND ".join(parts)


@dataclass(frozen=True)
class Or:
    children: tuple["PolicyNode", ...]

    def evaluate(self, attributes) -> bool:
        return any(c.evaluate(attributes) for c in self.children)

    def attributes(self) -> set[str]:
        out: set[str] = set()
        for c in self.children:
            out |= c.attributes()
        return out

    def to_text(self) -> str:
        return " OR ".join(c.to_text() for c in self.children)


PolicyNode = Attr | And | Or


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise PolicyParseError("unexpected end of policy")
        self.pos += 1
        return tok

    def parse_expr(self) -> PolicyNode:
        children = [self.parse_and()]
        while self.peek() == "OR":
            self.take()
            children.append(self.parse_and())
        if len(children) == 1:
            return children[0]
        # flatten associative nesting so equal formulas share one tree shape
        flat: list[PolicyNode] = []
        for c in children:
            flat.extend(c.children if isinstance(c, Or) else (c,))
        return Or(tuple(flat))

    def parse_and(self) -> PolicyNode:
        children = [self.parse_primary()]
        while self.peek() == "AND":
            self.take()
            children.append(self.parse_primary())
        if len(children) == 1:
            return children[0]
        flat: list[PolicyNode] = []
        for c in children:
            flat.extend(c.children if isinstance(c, And) else (c,))
        return And(tuple(flat))

    def parse_primary(self) -> PolicyNode:
        tok = self.take()
        if tok == "(":
            node = self.parse_expr()
            if self.take() != ")":
                raise PolicyParseError("expected ')'")
            return node
        if tok in ("AND", "OR", ")"):
            raise PolicyParseError(f"unexpected token {tok!r}")
        if tok.upper() in ("NOT",):
            raise PolicyParseError("negation is not allowed in purpose policies")
        if not _ATTR_RE.match(tok):
            raise PolicyParseError(f"bad attribute token {tok!r}")
        return Attr(tok)


def parse_policy(text: str) -> PolicyNode:
    if not isinstance(text, str) or not text.strip():
        raise PolicyParseError("policy text is empty")
    tokens = _TOKEN_RE.findall(text)
    parser = _Parser(tokens)
    node = parser.parse_expr()
    if parser.peek() is not None:
        raise PolicyParseError(f"trailing tokens after policy: {parser.peek()!r}")
    return node


def policy_text(node_or_text: PolicyNode | str) -> str:
    """Canonical text form; parsing it back yields an equal tree."""
    node = parse_policy(node_or_text) if isinstance(node_or_text, str) else node_or_text
    return node.to_text()
