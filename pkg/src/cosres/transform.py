"""Turning co-S refutations into co-rewriting-id and co-SLD refutations.

Given a co-S refutation ``G_0 .. G_n`` whose answer-producing unifiers are
``t_1 .. t_m``, let ``s_k = t_k t_(k+1) ... t_m`` (and ``s_(m+1)`` empty).
Walking the steps in order with a running index ``x`` (initially 1):

* rewriting   ``G_i s_x -> G_(i+1) s_x`` by the same clause, matcher ``g s_x``
* substitution ``G_i s_x -> G_(i+1) s_(x+1)`` by identity, then ``x += 1``
* loop        ``G_i s_x -> G_(i+1) s_(x+1)`` by loop detection with the empty
  unifier, then ``x += 1``

Every produced step is re-verified; dropping the identity steps then gives a
co-SLD refutation of ``G_0 s_1`` whose answer is empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from cosres.engine import (
    DerivationTrace, Mode, Rule, Step, Verdict, apply_goal, goal_vars,
    verify_trace,
)
from cosres.loader import Program, rename_apart
from cosres.terms import EMPTY, Substitution, Term, apply, compose

__all__ = [
    "TransformError", "suffix_compositions", "transform", "strip_identity",
    "SoundnessReport", "soundness_check",
]


class TransformError(Exception):
    """A step that should exist by construction failed to verify."""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


def suffix_compositions(thetas: Sequence[Substitution]) -> list[Substitution]:
    """``[s_1, ..., s_(m+1)]`` with ``s_k = t_k s_(k+1)`` and ``s_(m+1)`` empty."""
    sigmas = [EMPTY]
    for theta in reversed(thetas):
        sigmas.append(compose(theta, sigmas[-1]))
    sigmas.reverse()
    return sigmas


def _lift_matcher(program: Program, step: Step, sigma: Substitution) -> Substitution:
    # the matcher g s restricted to the renamed clause's variables
    c = rename_apart(program[step.clause_id], step.generation)
    return Substitution(
        {v: apply(apply(Term.var(v), step.unifier), sigma) for v in c.vars}, check=False
    )


def transform(program: Program, trace: DerivationTrace, check: bool = True) -> DerivationTrace:
    """Build the co-rewriting-id refutation of ``G_0 s_1`` from a co-S refutation."""
    if Mode(trace.mode) is not Mode.CO_SRES:
        raise TransformError(f"expected a co-sres trace, got {trace.mode}")
    if check:
        v = verify_trace(program, trace)
        if not v:
            raise TransformError(f"input is not a co-S refutation: {v.reason}", v.step)

    thetas = trace.unifiers
    sigmas = suffix_compositions(thetas)
    x = 0  # 0-based position of the current s_x
    goals = [apply_goal(trace.goals[0], sigmas[0])]
    steps = []
    for i, step in enumerate(trace.steps):
        nxt = trace.goals[i + 1]
        if step.rule is Rule.REWRITING:
            w = _lift_matcher(program, step, sigmas[x])
            new = Step(Rule.REWRITING, step.selected, step.clause_id, step.generation,
                       w, origin=i)
            target = apply_goal(nxt, sigmas[x])
        elif step.rule is Rule.SUBSTITUTION:
            new = Step(Rule.IDENTITY, step.selected, origin=i)
            target = apply_goal(nxt, sigmas[x + 1])
            if tuple(target) != tuple(goals[-1]):
                raise TransformError("instantiated goals differ across a substitution step", i + 1)
            x += 1
        elif step.rule is Rule.LOOP:
            # instantiation can merge hypotheses, so locate B s_x afresh
            hyp = None
            if step.hypothesis is not None:
                b = apply(trace.goals[i][step.selected].hyps[step.hypothesis], sigmas[x])
                hyps = goals[-1][step.selected].hyps
                hyp = hyps.index(b) if b in hyps else None
            new = Step(Rule.LOOP, step.selected, unifier=EMPTY, hypothesis=hyp, origin=i)
            target = apply_goal(nxt, sigmas[x + 1])
            x += 1
        else:
            raise TransformError(f"unexpected rule {step.rule}", i + 1)
        goals.append(target)
        steps.append(new)

    out = DerivationTrace(Mode.CO_REW_ID, goals, steps)
    if check:
        v = verify_trace(program, out)
        if not v:
            raise TransformError(f"co-rewriting-id trace does not verify: {v.reason}", v.step)
    return out


def strip_identity(trace: DerivationTrace) -> DerivationTrace:
    """Drop identity steps and relabel rewriting as co-SLD resolution steps."""
    goals = [trace.goals[0]]
    steps = []
    for step, nxt in zip(trace.steps, trace.goals[1:]):
        if step.rule is Rule.IDENTITY:
            continue
        if step.rule is Rule.REWRITING:
            step = Step(Rule.SLD, step.selected, step.clause_id, step.generation,
                        step.unifier, origin=step.origin)
        steps.append(step)
        goals.append(nxt)
    return DerivationTrace(Mode.CO_SLD, goals, steps)


@dataclass
class SoundnessReport:
    passed: bool
    answer: Optional[Substitution] = None
    stage: str = ""
    step: Optional[int] = None
    reason: str = ""
    co_rew_id: Optional[DerivationTrace] = None
    co_sld: Optional[DerivationTrace] = None
    notes: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed

    def __str__(self) -> str:
        if self.passed:
            return "pass: " + "; ".join(self.notes)
        where = f" at step {self.step}" if self.step is not None else ""
        return f"fail ({self.stage}){where}: {self.reason}"


def soundness_check(program: Program, trace: DerivationTrace) -> SoundnessReport:
    """Check that ``G s`` has a co-SLD refutation with empty answer.

    ``s`` is the computed substitution of the co-S refutation ``trace``.
    """
    v = verify_trace(program, trace)
    if Mode(trace.mode) is not Mode.CO_SRES:
        v = Verdict(False, None, f"expected a co-sres trace, got {trace.mode}")
    if not v:
        return SoundnessReport(False, stage="input", step=v.step, reason=v.reason)
    try:
        sigma = trace.computed
    except ValueError as exc:
        return SoundnessReport(False, stage="computed substitution", reason=str(exc))
    report = SoundnessReport(True, answer=sigma)

    try:
        mid = transform(program, trace, check=False)
    except TransformError as exc:
        return SoundnessReport(False, sigma, "transform", exc.step, str(exc))
    report.co_rew_id = mid
    if tuple(mid.goals[0]) != tuple(apply_goal(trace.goals[0], sigma)):
        return SoundnessReport(False, sigma, "transform", 0,
                               "transformed trace does not start at G0 under the answer")
    v = verify_trace(program, mid)
    if not v:
        return SoundnessReport(False, sigma, "co-rewriting-id", v.step, v.reason, mid)
    if mid.computed:
        return SoundnessReport(False, sigma, "co-rewriting-id", None,
                               f"computed substitution {mid.computed!r} is not empty", mid)
    report.notes.append(f"co-rewriting-id refutation of length {len(mid)} verified")

    final = strip_identity(mid)
    report.co_sld = final
    v = verify_trace(program, final)
    if not v:
        return SoundnessReport(False, sigma, "co-SLD", v.step, v.reason, mid, final)
    residue = {}
    for var in goal_vars(final.goals[0]):
        t = Term.var(var)
        for u in final.unifiers:
            t = apply(t, u)
        if t != Term.var(var):
            residue[var] = t
    if residue:
        return SoundnessReport(False, sigma, "co-SLD", None,
                               f"answer {residue!r} is not empty", mid, final)
    report.notes.append(f"co-SLD refutation of length {len(final)} verified")
    return report
