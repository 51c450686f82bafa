"""SLD, co-SLD, structural and co-inductive structural resolution.

Goals are tuples of :class:`Item` (an atom with its hypothesis set).  Every
strategy is expressed through four primitive reductions on a selected item:

``sld``             clause head unifies with the atom; body spliced in, unifier
                    applied to the whole goal (co-SLD rule 1 in co-inductive modes)
``rewriting``       clause head matches the atom; only the body is instantiated
``substitution``    head unifies but does not match; the unifier is applied to
                    the whole goal and the atom stays
``loop_detection``  the atom unifies with a member of its own hypothesis set;
                    the item is discharged and the unifier applied to the rest

plus ``identity``, which only appears in transformed traces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator, Optional, Sequence

from cosres.loader import Clause, Program, rename_apart
from cosres.terms import EMPTY, Substitution, Term, apply, compose
from cosres.unify import match_term, try_unify

log = logging.getLogger(__name__)

__all__ = [
    "Mode", "Rule", "Item", "Goal", "Step", "DerivationTrace", "SearchOptions",
    "BudgetExhausted", "SearchResult", "Verdict", "make_goal", "apply_goal",
    "goal_vars", "next_generation", "format_goal", "step_sld", "step_co_sld",
    "step_sres", "step_co_sres", "successors", "derive", "run_query",
    "computed_substitution", "verify_trace", "leftmost",
]


class Mode(str, Enum):
    SLD = "sld"
    CO_SLD = "co-sld"
    SRES = "sres"
    CO_SRES = "co-sres"
    CO_REW_ID = "co-rew-id"

    def __str__(self) -> str:
        return self.value


class Rule(str, Enum):
    SLD = "sld"
    REWRITING = "rewriting"
    SUBSTITUTION = "substitution"
    LOOP = "loop_detection"
    IDENTITY = "identity"

    def __str__(self) -> str:
        return self.value


MODE_RULES = {
    Mode.SLD: {Rule.SLD},
    Mode.CO_SLD: {Rule.SLD, Rule.LOOP},
    Mode.SRES: {Rule.REWRITING, Rule.SUBSTITUTION},
    Mode.CO_SRES: {Rule.REWRITING, Rule.SUBSTITUTION, Rule.LOOP},
    Mode.CO_REW_ID: {Rule.REWRITING, Rule.IDENTITY, Rule.LOOP},
}
COINDUCTIVE = {Mode.CO_SLD, Mode.CO_SRES, Mode.CO_REW_ID}
# rules whose unifier enters the computed substitution
ANSWER_RULES = {Rule.SLD, Rule.SUBSTITUTION, Rule.LOOP}
# rules that may not be used twice in a row
NO_REPEAT = {Rule.SUBSTITUTION, Rule.IDENTITY}


class Item:
    """An atom paired with its hypothesis set.

    Hypotheses are kept most-recent-first without duplicates; equality treats
    them as a set.
    """

    __slots__ = ("atom", "hyps", "_key")

    def __init__(self, atom: Term, hyps: Iterable[Term] = ()):
        self.atom = atom
        seen = []
        for h in hyps:
            if h not in seen:
                seen.append(h)
        self.hyps = tuple(seen)
        self._key = (atom, frozenset(self.hyps))

    def __eq__(self, other) -> bool:
        return isinstance(other, Item) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Item({self})"

    def __str__(self) -> str:
        return f"({self.atom}, {{{', '.join(map(str, self.hyps))}}})"

    def apply(self, s: Substitution) -> "Item":
        if not s:
            return self
        return Item(apply(self.atom, s), (apply(h, s) for h in self.hyps))

    @property
    def vars(self) -> frozenset:
        out = self.atom.vars
        for h in self.hyps:
            out |= h.vars
        return out


Goal = tuple  # tuple[Item, ...]


def make_goal(atoms: Iterable[Term]) -> Goal:
    return tuple(Item(a) for a in atoms)


def apply_goal(goal: Goal, s: Substitution) -> Goal:
    if not s:
        return goal
    return tuple(item.apply(s) for item in goal)


def goal_vars(goal: Goal) -> frozenset:
    out = frozenset()
    for item in goal:
        out |= item.vars
    return out


def next_generation(goal: Goal) -> int:
    """Smallest renaming generation above every variable in ``goal``."""
    return 1 + max((v.gen for v in goal_vars(goal)), default=0)


def format_goal(goal: Goal, hyps: bool = True) -> str:
    if not goal:
        return "←"
    if hyps:
        return "← " + ", ".join(map(str, goal))
    return "← " + ", ".join(str(item.atom) for item in goal)


@dataclass(frozen=True)
class Step:
    """Label of one reduction: rule, selected position, clause and witness."""

    rule: Rule
    selected: int
    clause_id: Optional[int] = None
    generation: Optional[int] = None
    unifier: Substitution = EMPTY
    hypothesis: Optional[int] = None
    origin: Optional[int] = None

    @property
    def uses_clause(self) -> bool:
        return self.rule in (Rule.SLD, Rule.REWRITING, Rule.SUBSTITUTION)


@dataclass
class DerivationTrace:
    mode: Mode
    goals: list
    steps: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.goals) != len(self.steps) + 1:
            raise ValueError("a trace needs exactly one more goal than steps")

    @property
    def initial(self) -> Goal:
        return self.goals[0]

    @property
    def final(self) -> Goal:
        return self.goals[-1]

    @property
    def is_refutation(self) -> bool:
        return len(self.final) == 0

    @property
    def rules(self) -> list[Rule]:
        return [s.rule for s in self.steps]

    @property
    def unifiers(self) -> list[Substitution]:
        return [s.unifier for s in self.steps if s.rule in ANSWER_RULES]

    @property
    def computed(self) -> Substitution:
        return computed_substitution(self)

    @property
    def query_vars(self) -> frozenset:
        return goal_vars(self.initial)

    def answer(self) -> Substitution:
        """Computed substitution restricted to the variables of the initial goal."""
        return self.computed.restrict(self.query_vars)

    def __len__(self) -> int:
        return len(self.steps)

    def render(self) -> str:
        co = self.mode in COINDUCTIVE
        lines = [f"G0: {format_goal(self.goals[0], co)}"]
        for i, (step, g) in enumerate(zip(self.steps, self.goals[1:]), 1):
            label = f"{step.rule}"
            if step.clause_id is not None:
                label += f" c{step.clause_id}"
            if step.unifier:
                label += f" {step.unifier!r}"
            lines.append(f"G{i}: {format_goal(g, co)}    [{label}]")
        return "\n".join(lines)


def computed_substitution(trace: DerivationTrace) -> Substitution:
    """Composition, in step order, of the unifiers that produce answers.

    Matchers (rewriting) and identity steps never contribute.
    """
    out = EMPTY
    for s in trace.unifiers:
        out = compose(out, s)
    return out


# -- primitive reductions ---------------------------------------------------

def _splice(goal: Goal, k: int, body: Sequence[Term], hyps: tuple) -> Goal:
    return goal[:k] + tuple(Item(b, hyps) for b in body) + goal[k + 1:]


def _extended_hyps(item: Item) -> tuple:
    return (item.atom,) + item.hyps


def sld_reductions(goal, program, k, generation, co=False) -> Iterator[tuple]:
    atom = goal[k].atom
    hyps = _extended_hyps(goal[k]) if co else ()
    for clause in program.candidates(atom):
        c = rename_apart(clause, generation)
        theta = try_unify(c.head, atom)
        if theta is None:
            continue
        new = apply_goal(_splice(goal, k, c.body, hyps), theta)
        yield new, Step(Rule.SLD, k, clause.id, generation, theta)


def rewriting_reductions(goal, program, k, generation, co=False) -> Iterator[tuple]:
    atom = goal[k].atom
    hyps = _extended_hyps(goal[k]) if co else ()
    for clause in program.candidates(atom):
        c = rename_apart(clause, generation)
        gamma = match_term(c.head, atom)
        if gamma is None:
            continue
        body = [apply(b, gamma) for b in c.body]
        yield _splice(goal, k, body, hyps), Step(Rule.REWRITING, k, clause.id, generation, gamma)


def substitution_reductions(goal, program, k, generation) -> Iterator[tuple]:
    atom = goal[k].atom
    for clause in program.candidates(atom):
        c = rename_apart(clause, generation)
        if match_term(c.head, atom) is not None:
            continue
        theta = try_unify(c.head, atom)
        if theta is None:
            continue
        yield apply_goal(goal, theta), Step(Rule.SUBSTITUTION, k, clause.id, generation, theta)


def loop_reductions(goal, k) -> Iterator[tuple]:
    item = goal[k]
    rest = goal[:k] + goal[k + 1:]
    for j, b in enumerate(item.hyps):
        theta = try_unify(item.atom, b)
        if theta is None:
            continue
        yield apply_goal(rest, theta), Step(Rule.LOOP, k, unifier=theta, hypothesis=j)


def successors(goal: Goal, program: Program, k: int, mode: Mode,
               generation: Optional[int] = None,
               previous: Optional[Rule] = None) -> Iterator[tuple]:
    """Lazily enumerate ``(next_goal, step)`` pairs for item ``k``.

    Order: loop detection (co-inductive modes), then rewriting, then
    substitution; clauses in program order.  Substitution is skipped right
    after a substitution step.
    """
    if not 0 <= k < len(goal):
        raise IndexError(f"selected position {k} outside goal of length {len(goal)}")
    if generation is None:
        generation = next_generation(goal)
    mode = Mode(mode)
    if mode in (Mode.CO_SLD, Mode.CO_SRES):
        yield from loop_reductions(goal, k)
    if mode in (Mode.SLD, Mode.CO_SLD):
        yield from sld_reductions(goal, program, k, generation, co=mode is Mode.CO_SLD)
    elif mode in (Mode.SRES, Mode.CO_SRES):
        yield from rewriting_reductions(goal, program, k, generation, co=mode is Mode.CO_SRES)
        if previous is not Rule.SUBSTITUTION:
            yield from substitution_reductions(goal, program, k, generation)
    else:
        raise ValueError(f"no search strategy for mode {mode}")


def step_sld(g: Goal, p: Program, k: int, generation: Optional[int] = None) -> list[tuple]:
    return list(successors(g, p, k, Mode.SLD, generation))


def step_co_sld(g: Goal, p: Program, k: int, generation: Optional[int] = None) -> list[tuple]:
    return list(successors(g, p, k, Mode.CO_SLD, generation))


def step_sres(g: Goal, p: Program, k: int, generation: Optional[int] = None,
              previous: Optional[Rule] = None) -> list[tuple]:
    return list(successors(g, p, k, Mode.SRES, generation, previous))


def step_co_sres(g: Goal, p: Program, k: int, generation: Optional[int] = None,
                 previous: Optional[Rule] = None) -> list[tuple]:
    return list(successors(g, p, k, Mode.CO_SRES, generation, previous))


# -- search -----------------------------------------------------------------

def leftmost(goal: Goal) -> int:
    return 0


class BudgetExhausted(Exception):
    """The search stopped on a resource bound, so failure is not established."""

    def __init__(self, found: int, steps: int, reason: str):
        self.found = found
        self.steps = steps
        self.reason = reason
        super().__init__(f"{reason} after {steps} steps ({found} refutation(s) found)")


@dataclass
class SearchOptions:
    max_steps: int = 10_000
    max_solutions: Optional[int] = 1
    max_depth: Optional[int] = None
    select: Callable[[Goal], int] = leftmost


def derive(program: Program, query: Sequence[Term] | Goal, mode: Mode | str = Mode.CO_SRES,
           opts: Optional[SearchOptions] = None) -> Iterator[DerivationTrace]:
    """Depth-first enumeration of refutations.

    Raises :class:`BudgetExhausted` once ``max_steps`` is spent, or at the end
    of the search if some branch was cut at ``max_depth``; a normal return
    means the search space was exhausted.
    """
    opts = opts or SearchOptions()
    mode = Mode(mode)
    if mode not in (Mode.SLD, Mode.CO_SLD, Mode.SRES, Mode.CO_SRES):
        raise ValueError(f"cannot search in mode {mode}")
    start = query if (query and isinstance(query[0], Item)) else make_goal(query)
    start = tuple(start)
    base = next_generation(start)

    if not start:
        yield DerivationTrace(mode, [start], [])
        return

    goals = [start]
    steps: list[Step] = []
    gens = [base]
    frames = [successors(start, program, opts.select(start), mode, base)]
    spent = found = 0
    cut = False
    while frames:
        try:
            nxt, step = next(frames[-1])
        except StopIteration:
            frames.pop()
            goals.pop()
            gens.pop()
            if steps:
                steps.pop()
            continue
        if spent >= opts.max_steps:
            raise BudgetExhausted(found, spent, "step budget exhausted")
        spent += 1
        if not nxt:
            found += 1
            yield DerivationTrace(mode, goals + [nxt], steps + [step])
            if opts.max_solutions is not None and found >= opts.max_solutions:
                return
            continue
        if opts.max_depth is not None and len(steps) + 1 >= opts.max_depth:
            cut = True
            continue
        gen = gens[-1] + (1 if step.uses_clause else 0)
        goals.append(nxt)
        steps.append(step)
        gens.append(gen)
        frames.append(successors(nxt, program, opts.select(nxt), mode, gen, step.rule))
    if cut:
        raise BudgetExhausted(found, spent, "depth bound reached")


@dataclass
class SearchResult:
    traces: list
    status: str  # "complete", "limit" (max_solutions reached) or "budget"
    steps: int = 0
    reason: str = ""

    @property
    def answers(self) -> list[Substitution]:
        return [t.answer() for t in self.traces]


def run_query(program: Program, query, mode: Mode | str = Mode.CO_SRES,
              opts: Optional[SearchOptions] = None) -> SearchResult:
    opts = opts or SearchOptions()
    traces = []
    try:
        for t in derive(program, query, mode, opts):
            traces.append(t)
    except BudgetExhausted as exc:
        return SearchResult(traces, "budget", exc.steps, exc.reason)
    if opts.max_solutions is not None and len(traces) >= opts.max_solutions:
        return SearchResult(traces, "limit")
    return SearchResult(traces, "complete")


# -- independent re-checking ------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    ok: bool
    step: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        if self.step is None:
            return f"invalid: {self.reason}"
        return f"invalid at step {self.step}: {self.reason}"


def _fail(i, reason) -> Verdict:
    return Verdict(False, i, reason)


def _check_step(program: Program, mode: Mode, goal: Goal, step: Step) -> tuple:
    """Recompute the successor of ``goal`` under ``step``; return (goal, error)."""
    co = mode in COINDUCTIVE
    k = step.selected
    if not 0 <= k < len(goal):
        return None, f"selected position {k} outside goal of length {len(goal)}"
    item = goal[k]
    atom = item.atom
    w = step.unifier
    if step.rule is Rule.IDENTITY:
        if w:
            return None, "identity step carries a non-empty substitution"
        return goal, None
    if step.rule is Rule.LOOP:
        if step.hypothesis is not None:
            if not 0 <= step.hypothesis < len(item.hyps):
                return None, f"no hypothesis at position {step.hypothesis}"
            pool = [item.hyps[step.hypothesis]]
        else:
            pool = list(item.hyps)
        ok = [b for b in pool
              if apply(atom, w) == apply(b, w) and w.domain <= atom.vars | b.vars]
        if not ok:
            return None, f"{atom} does not unify with a hypothesis under {w!r}"
        return apply_goal(goal[:k] + goal[k + 1:], w), None

    if step.clause_id is None or not 0 <= step.clause_id < len(program):
        return None, f"unknown clause {step.clause_id}"
    if step.generation is None:
        return None, "clause step without renaming generation"
    c: Clause = rename_apart(program[step.clause_id], step.generation)
    hyps = _extended_hyps(item) if co else ()
    if step.rule is Rule.REWRITING:
        if apply(c.head, w) != atom:
            return None, f"{c.head} under {w!r} is not {atom}"
        if not w.domain <= c.vars:
            return None, "matcher binds variables outside the clause"
        if w.domain & goal_vars(goal):
            return None, "matcher binds goal variables"
        return _splice(goal, k, [apply(b, w) for b in c.body], hyps), None
    if not w.domain <= c.vars | atom.vars:
        return None, "unifier binds variables outside the clause and the atom"
    if apply(c.head, w) != apply(atom, w):
        return None, f"{w!r} does not unify {c.head} and {atom}"
    if step.rule is Rule.SLD:
        return apply_goal(_splice(goal, k, c.body, hyps), w), None
    if step.rule is Rule.SUBSTITUTION:
        if match_term(c.head, atom) is not None:
            return None, f"{c.head} matches {atom}; substitution reduction does not apply"
        return apply_goal(goal, w), None
    return None, f"unknown rule {step.rule}"


def verify_trace(program: Program, trace: DerivationTrace,
                 require_refutation: bool = True) -> Verdict:
    """Re-check every step of ``trace`` from scratch against the rules of its mode.

    Step numbers in the verdict are 1-based (step ``i`` leads to ``G_i``).
    """
    mode = Mode(trace.mode)
    if len(trace.goals) != len(trace.steps) + 1:
        return _fail(None, "goal and step counts disagree")
    if any(item.hyps for item in trace.initial):
        return _fail(0, "initial goal has non-empty hypothesis sets")
    allowed = MODE_RULES[mode]
    prev = None
    for i, step in enumerate(trace.steps):
        if step.rule not in allowed:
            return _fail(i + 1, f"rule {step.rule} is not available in mode {mode}")
        if step.rule in NO_REPEAT and prev is step.rule:
            return _fail(i + 1, f"consecutive {step.rule} steps")
        prev = step.rule
        expected, err = _check_step(program, mode, trace.goals[i], step)
        if err:
            return _fail(i + 1, err)
        if tuple(expected) != tuple(trace.goals[i + 1]):
            return _fail(i + 1, f"expected {format_goal(expected)}, "
                                f"trace has {format_goal(trace.goals[i + 1])}")
    if require_refutation and not trace.is_refutation:
        return _fail(len(trace.steps), "final goal not empty")
    return Verdict(True)
