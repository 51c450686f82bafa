"""Rational-tree unification (no occurs check) and one-way term matching."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Optional, Sequence

from cosres.terms import Substitution, Term, Var, _canonicalize

__all__ = [
    "ClashError", "EquationSystem", "unify", "try_unify", "match_term",
    "reduce", "solve",
]


class ClashError(Exception):
    """The two terms denote different trees under every substitution."""

    def __init__(self, left: tuple, right: tuple, path: tuple[int, ...] = ()):
        self.left = left
        self.right = right
        self.path = path
        where = "/".join(map(str, path)) or "root"
        super().__init__(f"cannot unify {left[0]}/{left[1]} with {right[0]}/{right[1]} at {where}")


def _union_graph(a: Term, b: Term) -> tuple[list, int, int]:
    nodes = list(a.nodes)
    off = len(nodes)
    nodes.extend((lab, tuple(c + off for c in ks)) for lab, ks in b.nodes)
    return nodes, 0, off


def _solve_graph(nodes: list, pairs: list, prefer_right: bool = True) -> Substitution:
    """Union-find unification of node pairs inside one graph.

    Variable-only classes keep the variable introduced by the right member of
    a pair as their representative, so ``unify(head, goal_atom)`` binds
    clause variables to goal variables rather than the reverse.
    """
    parent = list(range(len(nodes)))

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    # one class per variable across the whole graph
    first: dict[Var, int] = {}
    for i, (lab, _) in enumerate(nodes):
        if isinstance(lab, Var):
            j = first.setdefault(lab, i)
            if j != i:
                parent[i] = j

    stack = [(x, y, ()) for x, y in pairs]
    while stack:
        x, y, path = stack.pop()
        x, y = find(x), find(y)
        if x == y:
            continue
        lx, kx = nodes[x]
        ly, ky = nodes[y]
        x_var, y_var = isinstance(lx, Var), isinstance(ly, Var)
        if x_var and y_var:
            if prefer_right:
                parent[x] = y
            else:
                parent[y] = x
        elif x_var:
            parent[x] = y
        elif y_var:
            parent[y] = x
        else:
            if lx != ly or len(kx) != len(ky):
                raise ClashError((lx, len(kx)), (ly, len(ky)), path)
            parent[y] = x
            for i, (cx, cy) in enumerate(zip(kx, ky)):
                stack.append((cx, cy, path + (i,)))

    quotient = [
        (lab, tuple(find(c) for c in ks)) if parent[i] == i else None
        for i, (lab, ks) in enumerate(nodes)
    ]
    bindings = {}
    for v, i in first.items():
        r = find(i)
        if nodes[r][0] == v:
            continue
        bindings[v] = Term(_canonicalize(quotient, r))
    return Substitution(bindings, check=False)


def unify(a: Term, b: Term) -> Substitution:
    """Most general rational unifier of ``a`` and ``b``.

    The result binds only variables of ``a`` and ``b``; cyclic equations such
    as ``X = f(X)`` are solved by cyclic terms instead of failing.
    """
    if a == b:
        return Substitution()
    nodes, ra, rb = _union_graph(a, b)
    return _solve_graph(nodes, [(ra, rb)])


def try_unify(a: Term, b: Term) -> Optional[Substitution]:
    try:
        return unify(a, b)
    except ClashError:
        return None


def match_term(pattern: Term, target: Term) -> Optional[Substitution]:
    """Matcher ``s`` with ``pattern s == target`` binding only pattern variables.

    Returns ``None`` when ``pattern`` does not subsume ``target``.  Variables
    shared by both terms must map to themselves, since a matcher is also a
    unifier and may not instantiate the target.
    """
    shared = pattern.vars & target.vars
    binding: dict[Var, int] = {}
    seen = set()
    stack = [(0, 0)]
    tnodes = target.nodes
    pnodes = pattern.nodes
    while stack:
        pair = stack.pop()
        if pair in seen:
            continue
        seen.add(pair)
        p, t = pair
        plab, pkids = pnodes[p]
        if isinstance(plab, Var):
            if plab in shared:
                if tnodes[t][0] != plab:
                    return None
            # target is minimized, so equal subtrees are the same node
            elif binding.setdefault(plab, t) != t:
                return None
            continue
        tlab, tkids = tnodes[t]
        if tlab != plab or len(tkids) != len(pkids):
            return None
        stack.extend(zip(pkids, tkids))
    return Substitution({v: target.subterm(n) for v, n in binding.items()}, check=False)


@dataclass
class EquationSystem:
    """A sequence of term equations ``lhs = rhs``."""

    equations: list[tuple[Term, Term]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.equations)

    def __len__(self) -> int:
        return len(self.equations)

    @property
    def is_reduced(self) -> bool:
        lhs = [l for l, _ in self.equations]
        return all(t.is_var for t in lhs) and len({t.label for t in lhs}) == len(lhs)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{l} = {r}" for l, r in self.equations) + "}"


_AUX = "_Q"


def _flatten(t: Term, fresh, out: list) -> Term:
    """Replace a cyclic term by a fresh variable plus one equation per node."""
    if not t.is_cyclic:
        return t
    names = [Var(_AUX, next(fresh)) for _ in t.nodes]
    for i, (lab, kids) in enumerate(t.nodes):
        if isinstance(lab, Var):
            out.append((Term.var(names[i]), Term.var(lab)))
        else:
            out.append((Term.var(names[i]), Term.fn(lab, *(Term.var(names[c]) for c in kids))))
    return Term.var(names[0])


def reduce(system: EquationSystem | Sequence[tuple[Term, Term]]) -> EquationSystem:
    """Transform a system into reduced form: ``X_i = t_i`` with distinct ``X_i``.

    Uses decomposition, orientation and variable merging; there is no occurs
    check, so ``X = f(X)`` is a reduced equation.  Cyclic input terms are
    first flattened into finite equations over auxiliary ``_Q_<n>`` variables.
    """
    fresh = count(1)
    work: list[tuple[Term, Term, tuple]] = []
    for l, r in system:
        extra: list = []
        l2, r2 = _flatten(l, fresh, extra), _flatten(r, fresh, extra)
        work.extend((a, b, ()) for a, b in extra)
        work.append((l2, r2, ()))
    work.reverse()

    solved: dict[Var, Term] = {}
    decomposed: set[tuple[Term, Term]] = set()

    def deref(t: Term) -> Term:
        while t.is_var and t.label in solved and solved[t.label].is_var:
            t = solved[t.label]
        return t

    while work:
        s, t, path = work.pop()
        s, t = deref(s), deref(t)
        if s == t:
            continue
        if not s.is_var and t.is_var:
            s, t = t, s
        if s.is_var:
            v = s.label
            if v in solved:
                # v is bound to structure: merge the two right-hand sides
                old = solved[v]
                if t.is_var:
                    solved[v] = t
                work.append((old, t, path))
            else:
                solved[v] = t
            continue
        if s.functor != t.functor or s.arity != t.arity:
            raise ClashError(s.indicator, t.indicator, path)
        if (s, t) in decomposed:
            continue
        decomposed.add((s, t))
        for i, (x, y) in enumerate(zip(s.args, t.args)):
            work.append((x, y, path + (i,)))
    return EquationSystem([(Term.var(v), t) for v, t in solved.items()])


def solve(system: EquationSystem) -> Substitution:
    """Solve a reduced system over rational trees.

    Each left-hand variable is replaced by its right-hand side wherever it
    occurs, so cyclic dependencies become cycles in the result graphs.
    """
    if not system.is_reduced:
        raise ValueError("system is not in reduced form")
    nodes: list = []
    root_of: dict[Var, int] = {}
    for l, r in system:
        off = len(nodes)
        nodes.extend((lab, tuple(c + off for c in ks)) for lab, ks in r.nodes)
        root_of[l.label] = off

    def resolve(i: int, seen=()) -> int:
        # follow var -> var chains to a structure node or a free variable
        lab = nodes[i][0]
        while isinstance(lab, Var) and lab in root_of:
            if i in seen:
                raise ValueError(f"variable cycle through {lab}")
            seen = seen + (i,)
            i = root_of[lab]
            lab = nodes[i][0]
        return i

    graph = [(lab, tuple(resolve(c) for c in ks)) for lab, ks in nodes]
    return Substitution(
        {v: Term(_canonicalize(graph, resolve(r))) for v, r in root_of.items()}
    )
