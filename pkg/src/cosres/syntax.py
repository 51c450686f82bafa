"""Concrete syntax for terms, substitutions and goals.

Grammar (shared by programs, queries and trace files)::

    term  ::= VAR | NUMBER | NAME [ "(" term { "," term } ")" ] | "mu" VAR "." term
    VAR   ::= [A-Z_][A-Za-z0-9_]*        (trailing "_<n>" is a renaming generation)
    NAME  ::= [a-z][A-Za-z0-9_]* with inner hyphens, normalized to "_"

Cyclic terms print either inline with binders (``mu A. s(A)``) or, for a
binding, as a recursive equation whose left-hand variable names the root
(``X = s(X)``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import count
from typing import Iterable, Optional

from cosres.terms import Substitution, Term, Var

__all__ = [
    "ParseError", "Token", "tokenize", "TermParser", "parse_term",
    "parse_substitution", "parse_var", "format_term", "format_binding",
    "format_substitution",
]


class ParseError(SyntaxError):
    """Syntax error with a 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1, source: str = "<input>"):
        super().__init__(f"{source}:{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column
        self.source = source


@dataclass(frozen=True)
class Token:
    kind: str  # VAR, NAME, NUM, PUNCT, EOF
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<VAR>[A-Z_][A-Za-z0-9_]*)
  | (?P<NAME>[a-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
  | (?P<NUM>[0-9]+)
  | (?P<PUNCT>:-|\?-|[(),.=])
""", re.VERBOSE)

_GEN_RE = re.compile(r"(.+)_([1-9][0-9]*)")


def tokenize(text: str, source: str = "<input>") -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, source)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


def parse_var(text: str) -> Var:
    m = _GEN_RE.fullmatch(text)
    if m:
        return Var(m.group(1), int(m.group(2)))
    return Var(text)


class TermParser:
    """Recursive-descent parser over a token list.

    Terms are parsed into a mutable node table and canonicalized once per
    top-level term.
    """

    def __init__(self, text: str, source: str = "<input>"):
        self.source = source
        self.tokens = tokenize(text, source)
        self.pos = 0
        self._anon = count(1)

    # -- token helpers ----------------------------------------------------

    @property
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek
        return tok.kind == "PUNCT" and tok.text == text

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.kind != "PUNCT" or tok.text != text:
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek
        raise ParseError(message, tok.line, tok.column, self.source)

    def at_end(self) -> bool:
        return self.peek.kind == "EOF"

    # -- terms ------------------------------------------------------------

    def term(self, bound: Optional[dict] = None) -> Term:
        nodes: list = []
        root = self._node(nodes, dict(bound or {}))
        return Term.from_graph(nodes, root)

    def _node(self, nodes: list, binders: dict) -> int:
        tok = self.next()
        if tok.kind == "VAR":
            if tok.text == "_":
                v = Var(f"_G{next(self._anon)}")
            else:
                v = parse_var(tok.text)
            if v in binders:
                return binders[v]
            nodes.append((v, ()))
            return len(nodes) - 1
        if tok.kind == "NUM":
            nodes.append((tok.text, ()))
            return len(nodes) - 1
        if tok.kind == "NAME":
            if tok.text == "mu" and self.peek.kind == "VAR":
                v = parse_var(self.next().text)
                self.expect(".")
                me = len(nodes)
                nodes.append(None)
                body = self._node(nodes, {**binders, v: me})
                if body == me:
                    self.error(f"mu {v}. {v} denotes no tree", tok)
                # the placeholder becomes an alias of the body node
                nodes[me] = nodes[body]
                return me
            name = tok.text.replace("-", "_")
            kids = []
            if self.at("("):
                self.next()
                kids.append(self._node(nodes, binders))
                while self.at(","):
                    self.next()
                    kids.append(self._node(nodes, binders))
                self.expect(")")
            nodes.append((name, tuple(kids)))
            return len(nodes) - 1
        self.error(f"expected a term, found {tok.text or 'end of input'!r}", tok)

    def term_list(self, stop: Iterable[str] = ()) -> list[Term]:
        """Comma-separated terms, possibly empty when the next token is a stop."""
        out: list[Term] = []
        stops = set(stop)
        if self.at_end() or (self.peek.kind == "PUNCT" and self.peek.text in stops):
            return out
        out.append(self.term())
        while self.at(","):
            self.next()
            out.append(self.term())
        return out


def parse_term(text: str) -> Term:
    p = TermParser(text)
    t = p.term()
    if not p.at_end():
        p.error(f"unexpected {p.peek.text!r} after term")
    return t


def parse_substitution(text: str) -> Substitution:
    """Parse ``V1 = t1, V2 = t2, ...`` where ``Vi`` may occur in ``ti`` as a back-reference."""
    p = TermParser(text)
    bindings = {}
    while not p.at_end():
        tok = p.next()
        if tok.kind != "VAR" or tok.text == "_":
            p.error("expected a variable on the left of '='", tok)
        v = parse_var(tok.text)
        if v in bindings:
            p.error(f"variable {v} bound twice", tok)
        p.expect("=")
        nodes: list = [None]
        body = p._node(nodes, {v: 0})
        if body == 0:
            p.error(f"{v} = {v} denotes no tree", tok)
        nodes[0] = nodes[body]
        bindings[v] = Term.from_graph(nodes, 0)
        if not p.at_end():
            p.expect(",")
    try:
        return Substitution(bindings)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from None


# -- printing ---------------------------------------------------------------

def _fresh_names(taken: set[str]):
    for i in count():
        letters = ""
        n = i
        while True:
            letters = chr(ord("A") + n % 26) + letters
            n = n // 26 - 1
            if n < 0:
                break
        if letters not in taken:
            yield letters


def _render(t: Term, root_name: Optional[str] = None) -> str:
    taken = {str(v) for v in t.vars}
    if root_name is not None:
        taken.add(root_name)
    fresh = _fresh_names(taken)
    names: dict[int, str] = {}
    if root_name is not None:
        names[0] = root_name
    path: set[int] = set()
    used: set[int] = set()

    def name_of(n: int) -> str:
        if n not in names:
            names[n] = next(fresh)
        return names[n]

    def go(n: int) -> str:
        label, kids = t.nodes[n]
        if isinstance(label, Var):
            return str(label)
        if not kids:
            return label
        path.add(n)
        parts = []
        for c in kids:
            if c in path:
                used.add(c)
                parts.append(name_of(c))
            else:
                parts.append(go(c))
        path.discard(n)
        body = f"{label}({', '.join(parts)})"
        if n in used:
            used.discard(n)
            if not (n == 0 and root_name is not None):
                body = f"mu {name_of(n)}. {body}"
        return body

    return go(0)


def format_term(t: Term) -> str:
    """Inline notation; cycles are written with ``mu`` binders."""
    return _render(t)


def format_binding(v: Var, t: Term, mu: bool = False) -> str:
    """``V = t`` with back-references to the root written as ``V`` itself."""
    if mu:
        return f"{v} = {format_term(t)}"
    return f"{v} = {_render(t, str(v))}"


def format_substitution(s: Substitution, mu: bool = False) -> str:
    return ", ".join(format_binding(v, t, mu) for v, t in sorted(s.items()))
