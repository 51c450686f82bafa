"""Acceptance suite: one test per criterion, summarized at the end of the run.

Run with ``pytest tests/test_acceptance.py``; the terminal summary lists one
PASS/FAIL line per criterion.
"""

import random
import time
from collections import Counter

import pytest

from cosres.engine import BudgetExhausted, Rule, SearchOptions, derive, run_query
from cosres.loader import parse_program, parse_query
from cosres.syntax import parse_term
from cosres.terms import Term, Var
from cosres.transform import soundness_check
from cosres.unify import try_unify
from generators import (
    hierarchical_program, random_atom, random_finite, random_pair, random_program,
)
from lemmas import LEMMAS, run_lemma
from oracles import canonical_answer, clash_in_unfoldings, unfold_applied
from test_engine import PQR, SPQR, S, worked_example_trace


def detail(record, text):
    record("detail", text)


@pytest.mark.criterion(1, "worked co-S trace reproduction")
def test_worked_co_s_trace(record_property):
    start = time.perf_counter()
    t = next(derive(SPQR, parse_query("q(X)"), "co-sres"))
    elapsed = time.perf_counter() - start
    expected = worked_example_trace()
    assert t.goals == expected.goals
    assert t.steps == expected.steps
    assert t.answer() == S("X = mu A. s(A)")
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    detail(record_property, f"first refutation equals the hand trace, {elapsed * 1000:.1f} ms")


@pytest.mark.criterion(2, "structural resolution trace reproduction")
def test_structural_resolution_trace(record_property):
    [t] = derive(PQR, parse_query("p(X), r(X)"), "sres", SearchOptions(max_solutions=None))
    assert [[str(i.atom) for i in g] for g in t.goals] == [
        ["p(X)", "r(X)"],
        ["p(f(X_1))", "r(f(X_1))"],
        ["q(X_1)", "r(f(X_1))"],
        ["q(a)", "r(f(a))"],
        ["r(f(a))"],
        [],
    ]
    assert t.rules == [Rule.SUBSTITUTION, Rule.REWRITING, Rule.SUBSTITUTION,
                       Rule.REWRITING, Rule.REWRITING]
    assert [s.unifier for s in t.steps[:3]] == [S("X = f(X_1)"), S("X_2 = X_1"), S("X_1 = a")]
    assert t.unifiers == [S("X = f(X_1)"), S("X_1 = a")]
    assert t.answer() == S("X = f(a)")
    detail(record_property, "5 steps, answer X = f(a)")


@pytest.mark.criterion(3, "bit-stream co-induction")
def test_bit_stream(record_property):
    prog = parse_program("bit(0).\nbit(1).\n"
                         "bit-stream(cons(X, Xs)) :- bit(X), bit-stream(Xs).\n")
    expected = parse_term("mu A. cons(0, A)")
    for mode in ("co-sld", "co-sres"):
        t = next(derive(prog, parse_query("bit_stream(cons(0, Xs))"), mode))
        assert t.answer()[Var("Xs")] == expected, mode
        assert Rule.LOOP in t.rules
    detail(record_property, "Xs = cons(0, Xs) in co-sld and co-sres")


@pytest.mark.criterion(4, "soundness pipeline on a random corpus")
def test_soundness_corpus(record_property):
    rng = random.Random(2024)
    start = time.perf_counter()
    programs = queries = 0
    refutations = []
    for _ in range(200):
        prog = random_program(rng, max_clauses=4, depth=2)
        programs += 1
        for _ in range(3):
            query = [random_atom(rng) for _ in range(rng.randint(1, 2))]
            queries += 1
            res = run_query(prog, query, "co-sres",
                            SearchOptions(max_steps=800, max_solutions=10, max_depth=30))
            refutations.extend((prog, t) for t in res.traces)
    failures = []
    rules = Counter()
    for prog, t in refutations:
        rules.update(set(t.rules))
        report = soundness_check(prog, t)
        if not report:
            failures.append(f"{report} for {prog} / {t.render()}")
    elapsed = time.perf_counter() - start
    assert programs >= 200 and queries >= 500
    assert not failures, failures[0]
    assert rules[Rule.LOOP] and rules[Rule.SUBSTITUTION], "corpus exercised too few rules"
    assert elapsed < 60, f"took {elapsed:.1f}s"
    detail(record_property,
           f"{programs} programs, {queries} queries, {len(refutations)} refutations "
           f"({rules[Rule.LOOP]} with loops, {rules[Rule.SUBSTITUTION]} with substitution) "
           f"all pass in {elapsed:.1f}s")


@pytest.mark.criterion(5, "preservation lemma suites")
def test_lemma_suites(record_property):
    summary = []
    for seed, (name, check) in enumerate(LEMMAS.items(), 1):
        checked, failures = run_lemma(check, 1000, seed)
        assert checked >= 1000
        assert not failures, f"{name}: {failures[0]}"
        summary.append(f"{name} {checked}/{checked}")
    detail(record_property, ", ".join(summary))


@pytest.mark.criterion(6, "unification oracle")
def test_unification_oracle(record_property):
    rng = random.Random(6)
    unified = clashes = 0
    for _ in range(1500):
        a, b = random_pair(rng)
        theta = try_unify(a, b)
        if theta is None:
            clashes += 1
            assert clash_in_unfoldings(a, b, 12) is not None, f"unconfirmed clash {a} / {b}"
        else:
            unified += 1
            for d in range(13):
                assert unfold_applied(a.nodes, 0, theta, d) == \
                    unfold_applied(b.nodes, 0, theta, d), f"{a} / {b} under {theta!r}"
    assert unified and clashes
    detail(record_property, f"{unified + clashes} pairs: {unified} unifiers agree to depth 12, "
                            f"{clashes} clashes confirmed")


@pytest.mark.criterion(7, "SLD and structural resolution answer agreement")
def test_answer_agreement(record_property):
    rng = random.Random(7)
    agreed, disagreements = 0, []
    total = 0
    while total < 120:
        prog, callable_preds, functors = hierarchical_program(rng)
        name, arity = rng.choice(callable_preds)
        query = [Term.fn(name, *(random_finite(rng, 1, ("X", "Y"), functors, 0.6)
                                 for _ in range(arity)))]
        qvars = query[0].vars
        answers = {}
        for mode in ("sld", "sres"):
            res = run_query(prog, query, mode, SearchOptions(
                max_steps=200_000, max_solutions=None, max_depth=50))
            assert res.status == "complete", f"{mode} search did not finish"
            answers[mode] = {canonical_answer(t.answer(), qvars) for t in res.traces}
        total += 1
        if answers["sld"] == answers["sres"]:
            agreed += 1
        else:
            extra = sorted(map(str, answers["sres"] - answers["sld"]))
            missing = sorted(map(str, answers["sld"] - answers["sres"]))
            disagreements.append(f"query {query[0]}: sres adds {extra}, lacks {missing}")
    detail(record_property, f"{agreed}/{total} programs agree")
    assert not disagreements, (
        f"{len(disagreements)}/{total} programs disagree, first: {disagreements[0]}")


def test_budget_exhaustion_is_reported_not_failed():
    # a sanity check for the corpus runs: cut branches are never silent
    prog = parse_program("p(X) :- p(f(X)).")
    with pytest.raises(BudgetExhausted):
        list(derive(prog, parse_query("p(a)"), "sld", SearchOptions(max_depth=5)))
