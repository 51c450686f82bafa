"""Definite-clause programs: parsing, printing and renaming apart."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from cosres.syntax import TermParser
from cosres.terms import Term, Var, apply

__all__ = [
    "Clause", "Program", "parse_program", "parse_query", "load_program",
    "rename_apart", "renamed_var",
]


@dataclass(frozen=True)
class Clause:
    id: int
    head: Term
    body: tuple[Term, ...] = ()

    @property
    def vars(self) -> frozenset:
        out = self.head.vars
        for b in self.body:
            out |= b.vars
        return out

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class Program:
    clauses: tuple[Clause, ...] = ()
    index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not self.index:
            for c in self.clauses:
                self.index.setdefault(c.head.indicator, []).append(c.id)

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def __getitem__(self, clause_id: int) -> Clause:
        return self.clauses[clause_id]

    def candidates(self, atom: Term) -> list[Clause]:
        """Clauses whose head has the atom's predicate symbol, in source order."""
        if atom.is_var:
            return list(self.clauses)
        return [self.clauses[i] for i in self.index.get(atom.indicator, ())]

    def __str__(self) -> str:
        return "\n".join(map(str, self.clauses))


def _atom(p: TermParser) -> Term:
    tok = p.peek
    t = p.term()
    if t.is_var:
        p.error("an atom cannot be a variable", tok)
    return t


def parse_program(text: str, source: str = "<program>") -> Program:
    """Parse clauses ``head.`` and ``head :- b1, ..., bn.`` in source order."""
    p = TermParser(text, source)
    clauses = []
    while not p.at_end():
        head = _atom(p)
        body = []
        if p.at(":-"):
            p.next()
            body.append(_atom(p))
            while p.at(","):
                p.next()
                body.append(_atom(p))
        p.expect(".")
        clauses.append(Clause(len(clauses), head, tuple(body)))
    return Program(tuple(clauses))


def load_program(path) -> Program:
    path = Path(path)
    return parse_program(path.read_text(encoding="utf-8"), str(path))


def parse_query(text: str, source: str = "<query>") -> list[Term]:
    """Parse a comma-separated goal; an optional ``?-`` prefix and final ``.`` are allowed."""
    p = TermParser(text, source)
    if p.at("?-"):
        p.next()
    atoms = []
    if not (p.at_end() or p.at(".")):
        atoms.append(_atom(p))
        while p.at(","):
            p.next()
            atoms.append(_atom(p))
    if p.at("."):
        p.next()
    if not p.at_end():
        p.error(f"unexpected {p.peek.text!r} in query")
    return atoms


def renamed_var(v: Var, generation: int) -> Var:
    base = v.name if v.gen == 0 else f"{v.name}_{v.gen}"
    return Var(base, generation)


def rename_apart(c: Clause, generation: int) -> Clause:
    """Copy of ``c`` whose variables all carry the given generation."""
    if not c.vars:
        return c
    ren = {v: Term.var(renamed_var(v, generation)) for v in c.vars}
    return Clause(c.id, apply(c.head, ren), tuple(apply(b, ren) for b in c.body))
