"""JSON trace files.

Layout::

    {"format": "cosres-trace/1", "mode": "co-sres",
     "goal": [{"atom": "q(X)", "hyps": []}],
     "steps": [{"index": 1, "rule": "rewriting", "selected": 0, "clause": 1,
                "generation": 1, "hypothesis": null, "unifier": "X_1 = X",
                "goal": [...]}, ...],
     "computed": "X = s(X), X_2 = s(X_2)"}

Terms use the inline syntax (``mu A. s(A)`` for cycles), unifiers the
recursive-equation syntax.  ``selected`` is a 0-based item position.
"""

from __future__ import annotations

import json
from pathlib import Path

from cosres.engine import DerivationTrace, Item, Mode, Rule, Step, format_goal
from cosres.syntax import ParseError, format_substitution, parse_substitution, parse_term

__all__ = ["FORMAT", "trace_to_dict", "trace_from_dict", "dump_trace", "load_trace"]

FORMAT = "cosres-trace/1"


def _goal_to_json(goal) -> list:
    return [{"atom": str(item.atom), "hyps": [str(h) for h in item.hyps]} for item in goal]


def _goal_from_json(data) -> tuple:
    return tuple(Item(parse_term(d["atom"]), [parse_term(h) for h in d.get("hyps", [])])
                 for d in data)


def trace_to_dict(trace: DerivationTrace) -> dict:
    steps = []
    for i, (step, goal) in enumerate(zip(trace.steps, trace.goals[1:]), 1):
        steps.append({
            "index": i,
            "rule": step.rule.value,
            "selected": step.selected,
            "clause": step.clause_id,
            "generation": step.generation,
            "hypothesis": step.hypothesis,
            "unifier": format_substitution(step.unifier),
            "goal": _goal_to_json(goal),
            "rendered": format_goal(goal),
        })
    try:
        computed = format_substitution(trace.computed)
    except ValueError:
        computed = None
    return {
        "format": FORMAT,
        "mode": trace.mode.value,
        "goal": _goal_to_json(trace.goals[0]),
        "steps": steps,
        "computed": computed,
    }


def trace_from_dict(data: dict) -> DerivationTrace:
    if data.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} document")
    goals = [_goal_from_json(data["goal"])]
    steps = []
    for i, s in enumerate(data["steps"], 1):
        if s.get("index", i) != i:
            raise ValueError(f"step {i} is numbered {s['index']}")
        steps.append(Step(
            Rule(s["rule"]), int(s["selected"]), s.get("clause"), s.get("generation"),
            parse_substitution(s.get("unifier", "")), s.get("hypothesis"),
        ))
        goals.append(_goal_from_json(s["goal"]))
    return DerivationTrace(Mode(data["mode"]), goals, steps)


def dump_trace(trace: DerivationTrace, path) -> None:
    Path(path).write_text(json.dumps(trace_to_dict(trace), indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")


def load_trace(path) -> DerivationTrace:
    try:
        return trace_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (KeyError, TypeError, ParseError) as exc:
        raise ValueError(f"{path}: malformed trace: {exc}") from exc
