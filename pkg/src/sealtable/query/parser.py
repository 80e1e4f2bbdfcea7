"""Recursive-descent parser for::

    SELECT <col, ... | *> FROM <ident> [WHERE <bool-expr>] [;]

Precedence is NOT > AND > OR; parentheses group.  Predicates are
``col <op> literal``, ``col BETWEEN lit AND lit`` and ``col LIKE 'pattern'``.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from ..errors import SqlSyntaxError
from .nodes import COMPARISON_OPS, KEYWORDS, And, Between, Comparison, Like, Not, Or, QueryAst

IDENT, NUMBER, STRING, OP, PUNCT, KEYWORD, EOF = "identifier", "number", "string", "operator", "punct", "keyword", "end"


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    pos: int
    text: str


def tokenize(text: str) -> list[Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word.upper() in KEYWORDS:
                tokens.append(Token(KEYWORD, word.upper(), i, word))
            else:
                tokens.append(Token(IDENT, word, i, word))
            i = j
        elif ch == '"':
            j, buf = i + 1, []
            while True:
                if j >= n:
                    raise SqlSyntaxError(i, {"closing double quote"}, "end of input")
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            if not buf:
                raise SqlSyntaxError(i, {"identifier"}, '""')
            tokens.append(Token(IDENT, "".join(buf), i, text[i : j + 1]))
            i = j + 1
        elif ch == "'":
            j, buf = i + 1, []
            while True:
                if j >= n:
                    raise SqlSyntaxError(i, {"closing quote"}, "end of input")
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            tokens.append(Token(STRING, "".join(buf), i, text[i : j + 1]))
            i = j + 1
        elif ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                raw = text[i:j]
                tokens.append(Token(NUMBER, Decimal(raw), i, raw))
            else:
                raw = text[i:j]
                tokens.append(Token(NUMBER, int(raw), i, raw))
            i = j
        elif text.startswith(("<>", "<=", ">="), i):
            tokens.append(Token(OP, text[i : i + 2], i, text[i : i + 2]))
            i += 2
        elif ch in "=<>":
            tokens.append(Token(OP, ch, i, ch))
            i += 1
        elif ch in ",*();-":
            tokens.append(Token(PUNCT, ch, i, ch))
            i += 1
        else:
            raise SqlSyntaxError(i, {"token"}, repr(ch))
    tokens.append(Token(EOF, None, n, ""))
    return tokens


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, *expected: str):
        tok = self.current
        raise SqlSyntaxError(tok.pos, expected, tok.text)

    def at(self, kind: str, value=None) -> bool:
        tok = self.current
        return tok.kind == kind and (value is None or tok.value == value)

    def accept(self, kind: str, value=None) -> Token | None:
        if self.at(kind, value):
            return self.advance()
        return None

    def expect(self, kind: str, value=None) -> Token:
        tok = self.accept(kind, value)
        if tok is None:
            self.fail(value if value is not None else kind)
        return tok

    def parse(self) -> QueryAst:
        self.expect(KEYWORD, "SELECT")
        if self.accept(PUNCT, "*"):
            projections = ("*",)
        else:
            if not self.at(IDENT):
                self.fail(IDENT, "*")
            cols = [self.advance().value]
            while self.accept(PUNCT, ","):
                cols.append(self.expect(IDENT).value)
            projections = tuple(cols)
        self.expect(KEYWORD, "FROM")
        table = self.expect(IDENT).value
        predicate = None
        if self.accept(KEYWORD, "WHERE"):
            predicate = self.parse_or()
        self.accept(PUNCT, ";")
        if not self.at(EOF):
            self.fail("WHERE", "AND", "OR", ";", EOF) if predicate is None else self.fail("AND", "OR", ";", EOF)
        return QueryAst(projections, table, predicate)

    def parse_or(self):
        node = self.parse_and()
        while self.accept(KEYWORD, "OR"):
            node = Or(node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_not()
        while self.accept(KEYWORD, "AND"):
            node = And(node, self.parse_not())
        return node

    def parse_not(self):
        if self.accept(KEYWORD, "NOT"):
            return Not(self.parse_not())
        return self.parse_primary()

    def parse_primary(self):
        if self.accept(PUNCT, "("):
            node = self.parse_or()
            self.expect(PUNCT, ")")
            return node
        if not self.at(IDENT):
            self.fail(IDENT, "(", "NOT")
        column = self.advance().value
        if self.at(OP):
            op = self.advance().value
            return Comparison(column, op, self.parse_literal())
        if self.accept(KEYWORD, "BETWEEN"):
            lo = self.parse_literal()
            self.expect(KEYWORD, "AND")
            return Between(column, lo, self.parse_literal())
        if self.accept(KEYWORD, "LIKE"):
            return Like(column, self.expect(STRING).value)
        self.fail(*COMPARISON_OPS, "BETWEEN", "LIKE")

    def parse_literal(self):
        if self.at(STRING):
            return self.advance().value
        if self.accept(PUNCT, "-"):
            return -self.expect(NUMBER).value
        if self.at(NUMBER):
            return self.advance().value
        self.fail(NUMBER, STRING)


def parse(text: str) -> QueryAst:
    """Parse query text into a :class:`QueryAst`; raises :class:`SqlSyntaxError`."""
    return Parser(text).parse()
