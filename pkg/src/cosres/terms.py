"""Rational terms as minimized cyclic term graphs, plus substitutions.

A :class:`Term` is stored in canonical form: the term graph is reduced by
bisimulation (partition refinement) and its nodes are numbered in depth-first
preorder from the root.  Two terms denote the same possibly-infinite tree iff
their canonical node tuples are identical, so ``==`` and ``hash`` are cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Union

__all__ = [
    "Var", "Term", "Substitution", "EMPTY", "TRUNCATED",
    "term_equal", "apply", "compose", "unfold", "distinct_subterms",
    "canonical_variant",
]


@dataclass(frozen=True, order=True)
class Var:
    """A variable identified by its source name and renaming generation."""

    name: str
    gen: int = 0

    def __str__(self) -> str:
        if self.gen == 0:
            return self.name
        return f"{self.name}_{self.gen}"


Label = Union[Var, str]
Node = tuple  # (label, children-indices)

# Reserved marker for cut-off positions in unfolded trees; not a legal functor.
TRUNCATED = ("⊥", ())


def _postorder(nodes: list, root: int) -> Optional[list]:
    """Nodes reachable from ``root`` in post-order, or None if there is a cycle."""
    order: list[int] = []
    state = {root: 0}  # 0 = on the DFS path, 1 = finished
    stack = [(root, 0)]
    while stack:
        n, i = stack.pop()
        kids = nodes[n][1]
        if i < len(kids):
            stack.append((n, i + 1))
            c = kids[i]
            st = state.get(c)
            if st is None:
                state[c] = 0
                stack.append((c, 0))
            elif st == 0:
                return None
        else:
            state[n] = 1
            order.append(n)
    return order


def _refine(nodes: list, root: int) -> tuple[list, dict]:
    """Moore-style partition refinement of the nodes reachable from ``root``."""
    order: list[int] = []
    seen = {root}
    stack = [root]
    while stack:
        n = stack.pop()
        order.append(n)
        for c in nodes[n][1]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    ids: dict = {}
    block = {}
    for n in order:
        label, kids = nodes[n]
        block[n] = ids.setdefault((label, len(kids)), len(ids))
    count = len(ids)
    while True:
        ids = {}
        new_block = {}
        for n in order:
            key = (block[n], tuple(block[c] for c in nodes[n][1]))
            new_block[n] = ids.setdefault(key, len(ids))
        block = new_block
        if len(ids) == count:
            return order, block
        count = len(ids)


def _canonicalize(nodes: list, root: int) -> tuple:
    """Minimize the graph reachable from ``root`` and renumber it canonically."""
    order = _postorder(nodes, root)
    if order is not None:
        # acyclic: hash-consing bottom-up already identifies equal subtrees
        ids: dict = {}
        block = {}
        for n in order:
            label, kids = nodes[n]
            block[n] = ids.setdefault((label, tuple(block[c] for c in kids)), len(ids))
    else:
        order, block = _refine(nodes, root)

    # canonical preorder numbering of blocks
    rep = {}
    for n in order:
        rep.setdefault(block[n], n)
    number: dict[int, int] = {}
    out: list = []
    stack = [block[root]]
    while stack:
        b = stack.pop()
        if b in number:
            continue
        number[b] = len(out)
        out.append(b)
        kids = nodes[rep[b]][1]
        for c in reversed(kids):
            if block[c] not in number:
                stack.append(block[c])
    return tuple(
        (nodes[rep[b]][0], tuple(number[block[c]] for c in nodes[rep[b]][1]))
        for b in out
    )


class Term:
    """An immutable rational term.

    ``nodes[i]`` is ``(label, children)`` where ``label`` is a :class:`Var`
    (no children) or a functor name; node 0 is the root.
    """

    __slots__ = ("nodes", "_hash", "_vars")

    def __init__(self, nodes: tuple):
        self.nodes = nodes
        self._hash = hash(nodes)
        self._vars = None

    # -- construction -----------------------------------------------------

    @classmethod
    def from_graph(cls, nodes: list, root: int = 0) -> "Term":
        """Build a term from an arbitrary (possibly cyclic) node table."""
        for label, kids in nodes:
            if isinstance(label, Var) and kids:
                raise ValueError(f"variable node {label} has children")
            for c in kids:
                if not 0 <= c < len(nodes):
                    raise ValueError(f"dangling child index {c}")
        return cls(_canonicalize(list(nodes), root))

    @classmethod
    def var(cls, v: Union[Var, str]) -> "Term":
        if isinstance(v, str):
            v = Var(v)
        return cls(((v, ()),))

    @classmethod
    def fn(cls, name: str, *args: "Term") -> "Term":
        if not args:
            return cls(((name, ()),))
        nodes: list = [None]
        kids = []
        for a in args:
            kids.append(len(nodes))
            off = len(nodes)
            nodes.extend((lab, tuple(c + off for c in ks)) for lab, ks in a.nodes)
        nodes[0] = (name, tuple(kids))
        return cls(_canonicalize(nodes, 0))

    const = fn

    @classmethod
    def mu(cls, v: Union[Var, str], body: "Term") -> "Term":
        """The rational term ``mu v. body``: occurrences of ``v`` loop to the root."""
        if isinstance(v, str):
            v = Var(v)
        if body.nodes[0][0] == v:
            raise ValueError(f"mu {v}. {v} denotes no tree")
        nodes = [(lab, tuple(0 if body.nodes[c][0] == v else c for c in ks))
                 for lab, ks in body.nodes]
        return cls(_canonicalize(nodes, 0))

    # -- inspection -------------------------------------------------------

    @property
    def label(self) -> Label:
        return self.nodes[0][0]

    @property
    def is_var(self) -> bool:
        return isinstance(self.nodes[0][0], Var)

    @property
    def functor(self) -> str:
        if self.is_var:
            raise TypeError(f"{self} is a variable")
        return self.nodes[0][0]

    @property
    def arity(self) -> int:
        return len(self.nodes[0][1])

    @property
    def indicator(self) -> tuple[str, int]:
        return (self.functor, self.arity)

    @property
    def args(self) -> tuple["Term", ...]:
        return tuple(self.subterm(c) for c in self.nodes[0][1])

    @property
    def vars(self) -> frozenset:
        if self._vars is None:
            self._vars = frozenset(lab for lab, _ in self.nodes if isinstance(lab, Var))
        return self._vars

    @property
    def is_ground(self) -> bool:
        return not self.vars

    @property
    def is_cyclic(self) -> bool:
        # back edge search by colored DFS
        color = [0] * len(self.nodes)
        stack = [(0, 0)]
        while stack:
            n, i = stack.pop()
            kids = self.nodes[n][1]
            if i == 0:
                color[n] = 1
            if i < len(kids):
                stack.append((n, i + 1))
                c = kids[i]
                if color[c] == 1:
                    return True
                if color[c] == 0:
                    stack.append((c, 0))
            else:
                color[n] = 2
        return False

    def subterm(self, index: int) -> "Term":
        if index == 0:
            return self
        # subgraphs of a minimal graph stay minimal; renumbering suffices
        return Term(_canonicalize(list(self.nodes), index))

    def __eq__(self, other) -> bool:
        return isinstance(other, Term) and self._hash == other._hash and self.nodes == other.nodes

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Term") -> bool:
        return str(self) < str(other)

    def __repr__(self) -> str:
        return f"Term({self})"

    def __str__(self) -> str:
        from cosres.syntax import format_term
        return format_term(self)


class Substitution(Mapping[Var, Term]):
    """A finite mapping from variables to rational terms in solved form.

    No domain variable occurs in any range term, and identity bindings are
    dropped, so the empty mapping is the identity.
    """

    __slots__ = ("_map", "_hash")

    def __init__(self, bindings: Union[Mapping, Iterable, None] = None, *, check: bool = True):
        m = {}
        for v, t in dict(bindings or {}).items():
            if isinstance(v, str):
                v = Var(v)
            if t.nodes == ((v, ()),):
                continue
            m[v] = t
        if check:
            dom = m.keys()
            for v, t in m.items():
                bad = t.vars & dom
                if bad:
                    names = ", ".join(sorted(map(str, bad)))
                    raise ValueError(f"not in solved form: {names} occurs in the binding of {v}")
        self._map = m
        self._hash = None

    def __getitem__(self, v: Var) -> Term:
        return self._map[v]

    def __iter__(self) -> Iterator[Var]:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def __eq__(self, other) -> bool:
        if isinstance(other, Substitution):
            return self._map == other._map
        if isinstance(other, Mapping):
            return self._map == dict(other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._map.items()))
        return self._hash

    def __repr__(self) -> str:
        return "{" + ", ".join(f"{v}/{t}" for v, t in self._map.items()) + "}"

    @property
    def domain(self) -> frozenset:
        return frozenset(self._map)

    @property
    def range_vars(self) -> frozenset:
        out = frozenset()
        for t in self._map.values():
            out |= t.vars
        return out

    def restrict(self, variables: Iterable[Var]) -> "Substitution":
        keep = set(variables)
        return Substitution({v: t for v, t in self._map.items() if v in keep}, check=False)

    def apply(self, t: Term) -> Term:
        return apply(t, self)

    def compose(self, other: "Substitution") -> "Substitution":
        return compose(self, other)


EMPTY = Substitution()


def term_equal(a: Term, b: Term) -> bool:
    """True iff ``a`` and ``b`` denote the same (possibly infinite) tree."""
    return a == b


def apply(t: Term, s: Mapping[Var, Term]) -> Term:
    """Replace every occurrence of a domain variable of ``s`` in ``t``."""
    hit = t.vars & s.keys()
    if not hit:
        return t
    nodes = list(t.nodes)
    target = {}
    for v in hit:
        off = len(nodes)
        nodes.extend((lab, tuple(c + off for c in ks)) for lab, ks in s[v].nodes)
        target[v] = off
    redirect = {i: target[lab] for i, (lab, _) in enumerate(t.nodes) if lab in target}
    for i in range(len(t.nodes)):
        lab, ks = nodes[i]
        if ks:
            nodes[i] = (lab, tuple(redirect.get(c, c) for c in ks))
    return Term(_canonicalize(nodes, redirect.get(0, 0)))


def compose(s1: Substitution, s2: Substitution) -> Substitution:
    """The substitution acting as ``s1`` followed by ``s2``.

    Raises :class:`ValueError` when the composite is not expressible in solved
    form (a variable bound by the composite still occurs in its range).
    """
    if not s1:
        return s2
    if not s2:
        return s1
    out = {}
    for v, t in s1.items():
        out[v] = apply(t, s2)
    for v, t in s2.items():
        if v not in s1:
            out[v] = t
    return Substitution(out)


def unfold(t: Term, depth: int):
    """Depth-bounded unrolling of ``t`` into nested tuples.

    Compound nodes become ``(functor, (child, ...))``, variables stay
    :class:`Var`; a compound node reached with no depth left is replaced by
    :data:`TRUNCATED`.  Constants are never truncated.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")

    def go(n: int, d: int):
        label, kids = t.nodes[n]
        if isinstance(label, Var):
            return label
        if not kids:
            return (label, ())
        if d == 0:
            return TRUNCATED
        return (label, tuple(go(c, d - 1) for c in kids))

    return go(0, depth)


def distinct_subterms(t: Term) -> frozenset:
    """All pairwise non-bisimilar subterms of ``t`` (one per canonical node)."""
    return frozenset(t.subterm(i) for i in range(len(t.nodes)))


def canonical_variant(t: Term, prefix: str = "_V") -> Term:
    """Rename the variables of ``t`` by order of first occurrence.

    Two terms are variants of each other iff their canonical variants are equal.
    """
    mapping: dict[Var, Var] = {}
    for lab, _ in t.nodes:
        if isinstance(lab, Var) and lab not in mapping:
            mapping[lab] = Var(prefix, len(mapping) + 1)
    return Term(tuple((mapping.get(lab, lab) if isinstance(lab, Var) else lab, ks)
                      for lab, ks in t.nodes))
