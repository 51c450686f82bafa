import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from cosres.cli import Repl, main
from cosres.engine import derive
from cosres.loader import load_program, parse_query
from cosres.syntax import parse_substitution
from cosres.tracefile import dump_trace, load_trace, trace_from_dict, trace_to_dict
from test_engine import worked_example_trace

DATA = Path(__file__).parent / "data"
LOOP, PQR, BITS, EMPTY_PL = (str(DATA / n) for n in ("loop.pl", "pqr.pl", "bits.pl", "empty.pl"))


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


class TestRun:
    def test_cyclic_answer(self):
        code, out = run("run", "--mode", "co-sres", "--query", "q(X)", LOOP)
        assert code == 0
        assert out.splitlines()[0] == "X = s(X)"

    def test_histogram(self):
        _, out = run("run", "-q", "q(X)", LOOP)
        assert "% 5 step(s): loop_detection=1 rewriting=3 substitution=1" in out

    def test_structural_resolution(self):
        code, out = run("run", "--mode", "sres", "--query", "p(X), r(X)", PQR)
        assert code == 0 and out.splitlines()[0] == "X = f(a)"

    def test_no_refutation(self):
        code, out = run("run", "--mode", "sld", "--query", "p(X)", EMPTY_PL)
        assert code == 1 and out.strip() == "no refutation"

    def test_budget_exhausted(self):
        code, out = run("run", "--mode", "sres", "--depth", "50",
                        "-q", "bit_stream(cons(0, Xs))", BITS)
        assert code == 1 and out.startswith("budget exhausted")

    def test_mu_and_preview(self):
        _, out = run("run", "--mu", "--unfold-depth", "3", "-q", "q(X)", LOOP)
        assert out.splitlines()[:2] == ["X = mu A. s(A)", "% X ~ s(s(s(...)))"]

    def test_ground_query_prints_true(self):
        _, out = run("run", "-q", "bit(0)", BITS)
        assert out.splitlines()[0] == "true"

    def test_all_solutions(self):
        _, out = run("run", "--mode", "sld", "--max-solutions", "0", "-q", "bit(X)", BITS)
        lines = [ln for ln in out.splitlines() if not ln.startswith("%")]
        assert lines == ["X = 0", ";", "X = 1"]

    def test_trace_output(self):
        _, out = run("run", "--trace", "-q", "q(X)", LOOP)
        assert "G0: ← (q(X), {})" in out and "[loop_detection" in out

    def test_parse_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.pl"
        bad.write_text("p(a).\nq(b :- r.\n")
        code, _ = run("run", "-q", "p(X)", str(bad))
        assert code == 2
        assert "bad.pl:2:" in capsys.readouterr().err

    def test_missing_file(self):
        code, _ = run("run", "-q", "p(X)", "/nonexistent/file.pl")
        assert code == 2

    def test_printed_answers_reparse(self):
        prog = load_program(LOOP)
        [t] = derive(prog, parse_query("q(X)"))
        _, out = run("run", "-q", "q(X)", LOOP)
        assert parse_substitution(out.splitlines()[0]) == t.answer()

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "cosres", "run", "-q", "q(X)", LOOP],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout.startswith("X = s(X)")


class TestCheckTrace:
    def test_json_trace_self_consistent(self, tmp_path):
        path = tmp_path / "t.json"
        code, _ = run("run", "-q", "q(X)", "--json-trace", str(path), LOOP)
        assert code == 0
        data = json.loads(path.read_text())
        assert data["format"] == "cosres-trace/1"
        assert [s["rule"] for s in data["steps"]] == [
            "rewriting", "substitution", "rewriting", "loop_detection", "rewriting"]
        assert data["steps"][1]["unifier"] == "X = s(X_2)"
        assert data["steps"][3]["unifier"] == "X_2 = s(X_2)"
        code, out = run("check-trace", LOOP, str(path))
        assert code == 0 and out.splitlines()[-1] == "pass"
        assert "co-rewriting-id refutation of length 5 verified" in out
        assert "co-SLD refutation of length 4 verified" in out

    def test_hand_encoded_trace_file(self, tmp_path):
        path = tmp_path / "t.json"
        dump_trace(worked_example_trace(), path)
        code, out = run("check-trace", LOOP, str(path))
        assert code == 0 and "pass" in out

    def test_truncated_trace(self, tmp_path):
        data = trace_to_dict(worked_example_trace())
        data["steps"] = data["steps"][:3]
        path = tmp_path / "t.json"
        path.write_text(json.dumps(data))
        code, out = run("check-trace", LOOP, str(path))
        assert code == 1 and "final goal not empty" in out

    def test_mismatched_program(self, tmp_path):
        path = tmp_path / "t.json"
        dump_trace(worked_example_trace(), path)
        code, out = run("check-trace", PQR, str(path))
        assert code == 1 and out.startswith("fail") and "step 1" in out

    def test_other_modes_verified(self, tmp_path):
        path = tmp_path / "t.json"
        run("run", "--mode", "sres", "-q", "p(X), r(X)", "--json-trace", str(path), PQR)
        code, out = run("check-trace", PQR, str(path))
        assert code == 0 and "sres refutation of length 5 verified" in out

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text('{"format": "cosres-trace/1", "mode": "co-sres"}')
        code, _ = run("check-trace", LOOP, str(path))
        assert code == 2

    def test_round_trip(self):
        t = worked_example_trace()
        again = trace_from_dict(json.loads(json.dumps(trace_to_dict(t))))
        assert again.goals == t.goals and again.steps == t.steps

    def test_load_rejects_other_formats(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text('{"format": "other"}')
        with pytest.raises(ValueError):
            load_trace(path)


def session(text, mode="co-sres", path=BITS):
    out = io.StringIO()
    Repl(load_program(path), io.StringIO(text), out, mode).run()
    return out.getvalue()


class TestRepl:
    def test_co_sld_answer(self):
        out = session(":mode co-sld\nbit_stream(cons(0, Xs)).\n\n")
        assert "Xs = cons(0, Xs) ." in out

    def test_sres_budget_notice(self):
        out = session(":mode sres\n:depth 300\nbit_stream(cons(0, Xs)).\n")
        assert "budget exhausted (step budget exhausted after 300 steps)" in out

    def test_empty_line_reprompts(self):
        out = session("\n\n:quit\n")
        assert out.count("?- ") == 3

    def test_more_answers(self):
        out = session("bit(X).\n;\n;\n", mode="sld")
        assert "X = 0" in out and "X = 1" in out and "no more refutations." in out

    def test_stop_after_first(self):
        out = session("bit(X).\n\n", mode="sld")
        assert "X = 0 ." in out and "X = 1" not in out

    def test_failure(self):
        assert "false." in session("bit(2).\n", mode="sld")

    def test_syntax_error_keeps_session(self):
        out = session("bit(X.\nbit(0).\n\n")
        assert "syntax error" in out and "true ." in out

    def test_commands(self):
        out = session(":mode\n:mode nope\n:depth\n:trace\nbit(0).\n\n:help\n")
        assert "mode is co-sres" in out and "depth is 10000" in out
        assert "trace on" in out and "G0: ← (bit(0), {})" in out
        assert "commands:" in out
