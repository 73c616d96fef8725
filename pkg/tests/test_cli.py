"""End-to-end command line behavior through main(), plus one script check."""

import json
import shutil
import subprocess

import pytest

from anonkit.cli import main

from conftest import INITIAL_CSV, R1_CSV, R2_CSV

ASIAN_RANGE_LINE = 'div: 3 <= count(ETH="Asian") <= 6'
FAIR_LINE = 'fair: ceil_k(C / R0 * (N - S("GEN"))) <= count(GEN="Female")'
IMPLIES_SET = (
    'div: 2 <= count(CTY="Calgary") <= 10\n'
    'div: 4 <= count(CTY="Calgary", ETH="Caucasian", GEN="Female") <= 7\n'
)
QUERY_LINE = 'div: 5 <= count(ETH="Caucasian", CTY="Calgary") <= 8'
UNSAT_SET = (
    'div: 6 <= count(ETH="Caucasian", CTY="Calgary") <= 8\n'
    'div: 1 <= count(CTY="Calgary") <= 5\n'
)
REDUNDANT_SET = 'div: 3 <= count(A="a") <= 6\ndiv: 2 <= count(A="a") <= 8\n'

EXPECTED_LOSS3_CSV = (
    "GEN,ETH\n"
    + "Female,Asian\n" * 3
    + "*,White\n" * 3
    + "Male,Black\n" * 3
)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def files(tmp_path):
    paths = {
        "initial": tmp_path / "initial.csv",
        "r1": tmp_path / "r1.csv",
        "r2": tmp_path / "r2.csv",
        "sigma": tmp_path / "sigma.txt",
        "out": tmp_path / "out.csv",
        "report": tmp_path / "report.json",
    }
    paths["initial"].write_text(INITIAL_CSV)
    paths["r1"].write_text(R1_CSV)
    paths["r2"].write_text(R2_CSV)
    paths["sigma"].write_text(ASIAN_RANGE_LINE + "\n" + FAIR_LINE + "\n")
    return paths


class TestValidate:
    def test_passing_relation(self, capsys, files):
        code, out, _ = run(
            capsys,
            "validate",
            "--input", str(files["r2"]),
            "--initial", str(files["initial"]),
            "--constraints", str(files["sigma"]),
            "--k", "3",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["all_satisfied"] is True
        assert payload["reports"][0]["observed"] == 3
        assert payload["config"]["command"] == "validate"
        assert payload["version"]

    def test_failing_relation(self, capsys, files):
        code, out, _ = run(
            capsys,
            "validate",
            "--input", str(files["r1"]),
            "--initial", str(files["initial"]),
            "--constraints", str(files["sigma"]),
            "--k", "3",
        )
        assert code == 1
        payload = json.loads(out)
        assert payload["all_satisfied"] is False
        assert payload["reports"][0]["observed"] == 0
        assert payload["reports"][0]["resolved_lo"] == 3

    def test_pretty_table(self, capsys, files):
        code, out, _ = run(
            capsys,
            "validate",
            "--input", str(files["r2"]),
            "--initial", str(files["initial"]),
            "--constraints", str(files["sigma"]),
            "--k", "3",
            "--pretty",
        )
        assert code == 0
        assert "ok" in out
        assert "all satisfied: yes" in out

    def test_fairness_needs_initial(self, capsys, files):
        code, _, err = run(
            capsys,
            "validate",
            "--input", str(files["r2"]),
            "--constraints", str(files["sigma"]),
            "--k", "3",
        )
        assert code == 2
        assert err.startswith("error:")

    def test_malformed_constraint_reports_position(self, capsys, files, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("div: 3 <= count(ETH=Asian)\n")
        code, _, err = run(
            capsys,
            "validate",
            "--input", str(files["r2"]),
            "--constraints", str(bad),
            "--k", "3",
        )
        assert code == 2
        assert "line 1" in err
        assert "col" in err

    def test_custom_star_token(self, capsys, files, tmp_path):
        alt = tmp_path / "alt.csv"
        alt.write_text(R2_CSV.replace("*", "?"))
        code, out, _ = run(
            capsys,
            "validate",
            "--input", str(alt),
            "--initial", str(files["initial"]),
            "--constraints", str(files["sigma"]),
            "--k", "3",
            "--star", "?",
        )
        assert code == 0
        assert json.loads(out)["all_satisfied"] is True

    def test_missing_file(self, capsys, files, tmp_path):
        code, _, err = run(
            capsys,
            "validate",
            "--input", str(tmp_path / "nope.csv"),
            "--constraints", str(files["sigma"]),
            "--k", "3",
        )
        assert code == 2
        assert err.startswith("error:")


class TestImplies:
    def test_not_implied(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text(IMPLIES_SET)
        code, out, _ = run(
            capsys, "implies", "--constraints", str(sigma), "--query", QUERY_LINE
        )
        assert code == 1
        payload = json.loads(out)
        assert payload["implied"] is False
        assert payload["derived_range"] == {"lo": 4, "hi": 10}

    def test_implied(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text('div: 3 <= count(A="a") <= 6\n')
        code, out, _ = run(
            capsys,
            "implies",
            "--constraints", str(sigma),
            "--query", 'div: 2 <= count(A="a") <= 8',
        )
        assert code == 0
        assert json.loads(out)["implied"] is True

    def test_explain_trace(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text(IMPLIES_SET)
        code, out, _ = run(
            capsys,
            "implies",
            "--constraints", str(sigma),
            "--query", QUERY_LINE,
            "--explain",
        )
        assert code == 1
        trace = json.loads(out)["trace"]
        assert [step["axiom"] for step in trace] == [
            "attribute-extension",
            "attribute-reduction",
            "range-intersection",
        ]
        assert trace[-1]["source"] is None

    def test_pretty(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text(IMPLIES_SET)
        code, out, _ = run(
            capsys,
            "implies",
            "--constraints", str(sigma),
            "--query", QUERY_LINE,
            "--pretty", "--explain",
        )
        assert code == 1
        assert "derived range: [4,10]" in out
        assert "implied:       no" in out
        assert "trace:" in out


class TestSatisfiable:
    def test_satisfiable_with_witness(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text('div: 3 <= count(A="a") <= 6\ndiv: 3 <= count(A="b") <= 6\n')
        code, out, _ = run(capsys, "satisfiable", "--constraints", str(sigma))
        assert code == 0
        payload = json.loads(out)
        assert payload["satisfiable"] is True
        assert payload["witness"] == [
            {"target": {"A": "a"}, "count": 3},
            {"target": {"A": "b"}, "count": 3},
        ]

    def test_unsatisfiable(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text(UNSAT_SET)
        code, out, _ = run(capsys, "satisfiable", "--constraints", str(sigma))
        assert code == 1
        payload = json.loads(out)
        assert payload["satisfiable"] is False
        assert payload["false_constraint"] == {
            "target": {"CTY": "Calgary"},
            "range": {"lo": 6, "hi": 5},
        }

    def test_pretty_unsat(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text(UNSAT_SET)
        code, out, _ = run(
            capsys, "satisfiable", "--constraints", str(sigma), "--pretty"
        )
        assert code == 1
        assert "unsatisfiable" in out


class TestMincover:
    def test_drops_the_implied_line(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text(REDUNDANT_SET)
        code, out, _ = run(capsys, "mincover", "--constraints", str(sigma))
        assert code == 0
        assert out == 'div: 3 <= count(A="a") <= 6\n'

    def test_cover_still_implies_the_originals(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text(REDUNDANT_SET)
        code, out, _ = run(capsys, "mincover", "--constraints", str(sigma))
        assert code == 0
        cover = tmp_path / "cover.txt"
        cover.write_text(out)
        for line in REDUNDANT_SET.strip().splitlines():
            code, _, _ = run(
                capsys, "implies", "--constraints", str(cover), "--query", line
            )
            assert code == 0

    def test_unsatisfiable_set(self, capsys, tmp_path):
        sigma = tmp_path / "sigma.txt"
        sigma.write_text(UNSAT_SET)
        code, out, err = run(capsys, "mincover", "--constraints", str(sigma))
        assert code == 1
        assert out == ""
        assert "unsatisfiable" in err


class TestAnonymize:
    def anonymize(self, capsys, files, constraints, mode, *extra):
        files["sigma"].write_text(constraints)
        return run(
            capsys,
            "anonymize",
            "--input", str(files["initial"]),
            "--constraints", str(files["sigma"]),
            "--k", "3",
            "--qi", "GEN,ETH",
            "--mode", mode,
            "--out", str(files["out"]),
            "--report", str(files["report"]),
            *extra,
        )

    @pytest.mark.parametrize("mode,optimal", [("greedy", False), ("exact", True), ("oracle", True)])
    def test_solves_the_fixture(self, capsys, files, mode, optimal):
        code, _, _ = self.anonymize(capsys, files, ASIAN_RANGE_LINE + "\n", mode)
        assert code == 0
        assert files["out"].read_text() == EXPECTED_LOSS3_CSV
        payload = json.loads(files["report"].read_text())
        assert payload["outcome"] == "solution"
        assert payload["loss"] == 3
        assert payload["optimal"] is optimal
        assert payload["clustering"] == [[0, 1, 2], [3, 4, 5], [6, 7, 8]]
        assert all(rep["satisfied"] for rep in payload["reports"])
        assert payload["config"]["mode"] == mode
        assert payload["config"]["qi"] == ["GEN", "ETH"]

    def test_infeasible(self, capsys, files):
        code, _, err = self.anonymize(
            capsys, files, 'div: 3 <= count(ETH="Hispanic")\n', "exact"
        )
        assert code == 1
        assert not files["out"].exists()
        payload = json.loads(files["report"].read_text())
        assert payload["outcome"] == "infeasible"
        assert "below the lower bound" in payload["reason"]
        assert "infeasible" in err

    def test_heuristic_gives_up(self, capsys, files):
        code, _, err = self.anonymize(
            capsys, files, 'div: 6 <= count(ETH="Asian")\n', "greedy"
        )
        assert code == 1
        assert not files["out"].exists()
        payload = json.loads(files["report"].read_text())
        assert payload["outcome"] == "unknown"
        assert "stalled" in payload["reason"]
        assert "unknown" in err

    def test_abort_keeps_the_incumbent(self, capsys, files):
        code, _, err = self.anonymize(
            capsys, files, "", "exact", "--max-nodes", "12"
        )
        assert code == 3
        assert "aborted" in err
        payload = json.loads(files["report"].read_text())
        assert payload["outcome"] == "aborted"
        assert payload["loss"] == 18
        assert payload["optimal"] is False
        assert files["out"].exists()

    def test_abort_without_incumbent(self, capsys, files):
        code, _, _ = self.anonymize(capsys, files, "", "exact", "--max-nodes", "1")
        assert code == 3
        assert not files["out"].exists()
        payload = json.loads(files["report"].read_text())
        assert payload["outcome"] == "aborted"
        assert "loss" not in payload

    def test_report_ends_with_newline(self, capsys, files):
        self.anonymize(capsys, files, ASIAN_RANGE_LINE + "\n", "greedy")
        assert files["report"].read_text().endswith("}\n")

    def test_same_seed_same_bytes(self, capsys, files, tmp_path):
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.csv"
            report = tmp_path / f"{name}.json"
            files["sigma"].write_text('div: count(ETH="Asian") <= 0\n')
            code = main([
                "anonymize",
                "--input", str(files["initial"]),
                "--constraints", str(files["sigma"]),
                "--k", "3",
                "--qi", "GEN,ETH",
                "--mode", "greedy",
                "--seed", "7",
                "--out", str(out),
                "--report", str(report),
            ])
            capsys.readouterr()
            assert code == 0
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_unknown_qi_attribute(self, capsys, files):
        code, _, err = run(
            capsys,
            "anonymize",
            "--input", str(files["initial"]),
            "--constraints", str(files["sigma"]),
            "--k", "3",
            "--qi", "GEN,ZIP",
            "--mode", "greedy",
            "--out", str(files["out"]),
            "--report", str(files["report"]),
        )
        assert code == 2
        assert err.startswith("error:")

    def test_pre_starred_input_rejected(self, capsys, files):
        files["sigma"].write_text(ASIAN_RANGE_LINE + "\n")
        code, _, err = run(
            capsys,
            "anonymize",
            "--input", str(files["r2"]),
            "--constraints", str(files["sigma"]),
            "--k", "3",
            "--qi", "GEN,ETH",
            "--mode", "greedy",
            "--out", str(files["out"]),
            "--report", str(files["report"]),
        )
        assert code == 2
        assert "suppressed" in err


@pytest.mark.skipif(shutil.which("anon") is None, reason="script not on PATH")
def test_installed_script_reports_its_version():
    proc = subprocess.run(["anon", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip().startswith("anon ")
