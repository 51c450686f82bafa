"""Command-line front end: ``cosres run``, ``cosres repl`` and ``cosres check-trace``."""

from __future__ import annotations

import argparse
import sys
from collections import Counter
from typing import Optional, TextIO

from cosres.engine import (
    BudgetExhausted, DerivationTrace, Mode, SearchOptions, derive, verify_trace,
)
from cosres.loader import Program, load_program, parse_query
from cosres.syntax import ParseError, format_binding
from cosres.terms import TRUNCATED, Var, unfold
from cosres.tracefile import dump_trace, load_trace
from cosres.transform import soundness_check

SEARCH_MODES = ["sld", "co-sld", "sres", "co-sres"]


def _preview(tree) -> str:
    if tree == TRUNCATED:
        return "..."
    if isinstance(tree, Var):
        return str(tree)
    name, kids = tree
    if not kids:
        return name
    return f"{name}({', '.join(_preview(k) for k in kids)})"


def format_answer(trace: DerivationTrace, mu: bool = False,
                  unfold_depth: Optional[int] = None) -> list[str]:
    """Bindings of the query variables, one recursive equation per line."""
    answer = trace.answer()
    lines = []
    for v in sorted(trace.query_vars):
        if v not in answer:
            continue
        lines.append(format_binding(v, answer[v], mu))
        if unfold_depth is not None and answer[v].is_cyclic:
            lines.append(f"% {v} ~ {_preview(unfold(answer[v], unfold_depth))}")
    return lines or ["true"]


def rule_histogram(trace: DerivationTrace) -> str:
    counts = Counter(s.rule.value for s in trace.steps)
    parts = " ".join(f"{r}={n}" for r, n in sorted(counts.items()))
    return f"% {len(trace)} step(s){': ' + parts if parts else ''}"


def _options(depth: int, max_solutions: Optional[int]) -> SearchOptions:
    return SearchOptions(max_steps=depth, max_solutions=max_solutions)


def cmd_run(args, out: TextIO) -> int:
    program = load_program(args.program)
    query = parse_query(args.query)
    limit = None if args.max_solutions == 0 else args.max_solutions
    found = 0
    status = "no refutation"
    try:
        for trace in derive(program, query, args.mode, _options(args.depth, limit)):
            found += 1
            if found > 1:
                print(";", file=out)
            for line in format_answer(trace, args.mu, args.unfold_depth):
                print(line, file=out)
            print(rule_histogram(trace), file=out)
            if args.trace:
                print(trace.render(), file=out)
            if args.json_trace:
                dump_trace(trace, args.json_trace)
    except BudgetExhausted as exc:
        status = f"budget exhausted: {exc}"
    if found == 0:
        print(status, file=out)
        return 1
    if status != "no refutation":
        print(f"% {status}", file=out)
    return 0


def cmd_check_trace(args, out: TextIO) -> int:
    program = load_program(args.program)
    trace = load_trace(args.trace)
    if trace.mode is Mode.CO_SRES:
        report = soundness_check(program, trace)
        if report:
            print(f"computed substitution: {report.answer!r}", file=out)
            for note in report.notes:
                print(note, file=out)
            print("pass", file=out)
            return 0
        print(f"fail: {report}", file=out)
        return 1
    verdict = verify_trace(program, trace)
    if verdict:
        print(f"{trace.mode} refutation of length {len(trace)} verified", file=out)
        print("pass", file=out)
        return 0
    print(f"fail: {verdict}", file=out)
    return 1


class Repl:
    """Line-oriented query loop over one program."""

    prompt = "?- "

    def __init__(self, program: Program, stdin: TextIO, stdout: TextIO,
                 mode: str = "co-sres", depth: int = 10_000):
        self.program = program
        self.stdin = stdin
        self.stdout = stdout
        self.mode = mode
        self.depth = depth
        self.show_trace = False

    def say(self, text: str = "", end: str = "\n") -> None:
        print(text, file=self.stdout, end=end)
        self.stdout.flush()

    def readline(self) -> Optional[str]:
        line = self.stdin.readline()
        return None if line == "" else line.rstrip("\n")

    def command(self, line: str) -> bool:
        parts = line[1:].split()
        name, rest = parts[0] if parts else "", parts[1:]
        if name in ("q", "quit"):
            return False
        if name == "mode":
            if not rest or rest[0] not in SEARCH_MODES:
                self.say(f"mode is {self.mode}; choose one of {', '.join(SEARCH_MODES)}")
            else:
                self.mode = rest[0]
                self.say(f"mode {self.mode}")
        elif name == "depth":
            try:
                self.depth = int(rest[0])
                self.say(f"depth {self.depth}")
            except (IndexError, ValueError):
                self.say(f"depth is {self.depth}")
        elif name == "trace":
            self.show_trace = not self.show_trace
            self.say(f"trace {'on' if self.show_trace else 'off'}")
        else:
            self.say("commands: :mode MODE, :depth N, :trace, :quit")
        return True

    def ask(self, text: str) -> None:
        try:
            query = parse_query(text)
        except ParseError as exc:
            self.say(f"syntax error: {exc.message} (column {exc.column})")
            return
        found = 0
        try:
            for trace in derive(self.program, query, self.mode,
                                _options(self.depth, None)):
                found += 1
                if self.show_trace:
                    self.say(trace.render())
                self.say(", ".join(format_answer(trace)), end=" ")
                reply = self.readline()
                if reply is None or reply.strip() != ";":
                    self.say(".")
                    return
        except BudgetExhausted as exc:
            self.say(f"budget exhausted ({exc.reason} after {exc.steps} steps)")
            return
        self.say("false." if found == 0 else "no more refutations.")

    def run(self) -> int:
        self.say(f"% {len(self.program)} clause(s) loaded, mode {self.mode}")
        while True:
            self.say(self.prompt, end="")
            line = self.readline()
            if line is None:
                self.say()
                return 0
            line = line.strip()
            if not line:
                continue
            if line.startswith(":"):
                if not self.command(line):
                    return 0
                continue
            self.ask(line)


def cmd_repl(args, out: TextIO) -> int:
    program = load_program(args.program)
    return Repl(program, sys.stdin, out, args.mode, args.depth).run()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cosres", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="answer one query")
    run.add_argument("program")
    run.add_argument("--query", "-q", required=True)
    run.add_argument("--mode", choices=SEARCH_MODES, default="co-sres")
    run.add_argument("--depth", type=int, default=10_000, help="maximum number of steps")
    run.add_argument("--max-solutions", type=int, default=1, help="0 for all")
    run.add_argument("--trace", action="store_true", help="print each refutation")
    run.add_argument("--json-trace", metavar="PATH", help="write the last refutation as JSON")
    run.add_argument("--unfold-depth", type=int, help="finite preview of cyclic answers")
    run.add_argument("--mu", action="store_true", help="print cyclic answers with mu binders")
    run.set_defaults(func=cmd_run)

    repl = sub.add_parser("repl", help="interactive query loop")
    repl.add_argument("program")
    repl.add_argument("--mode", choices=SEARCH_MODES, default="co-sres")
    repl.add_argument("--depth", type=int, default=10_000)
    repl.set_defaults(func=cmd_repl)

    check = sub.add_parser("check-trace", help="verify a JSON trace against a program")
    check.add_argument("program")
    check.add_argument("trace")
    check.set_defaults(func=cmd_check_trace)
    return parser


def main(argv=None, out: TextIO = None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
