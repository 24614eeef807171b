import json
import re
import subprocess
import sys

import pytest

from relprec.cli import main

CASES = {
    "verify-model": ["verify-model", "--format", "p=3,emin=-1,emax=1,sub=2", "--mode", "ru"],
    "verify-innerprod": ["verify-innerprod", "--format", "3", "--n-max", "2", "--exhaustive", "--trials", "20", "--seed", "5"],
    "analyze": ["analyze", "--format", "24", "--expr", "x*y", "--env", "{env}", "--compare-higham", "10"],
    "demo-innerprod": ["demo-innerprod", "--format", "4", "--n", "3", "--trials", "5", "--seed", "9"],
    "counterexamples": ["counterexamples"],
}


@pytest.fixture
def env_file(tmp_path):
    path = tmp_path / "env.json"
    path.write_text(json.dumps({"x": {"sign": "pos"}, "y": {"sign": "pos"}}))
    return str(path)


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def fill(args, env_file):
    return [a.replace("{env}", env_file) for a in args]


class TestExitCodes:
    def test_verify_model_ok(self, capsys):
        code, out, _ = run(["verify-model", "--format", "p=3"], capsys)
        assert code == 0 and "violations: 0" in out

    def test_ru_delta_bounded(self, tmp_path, capsys):
        path = tmp_path / "r.json"
        code, _, _ = run(["verify-model", "--format", "p=3", "--mode", "ru", "--json", str(path)], capsys)
        data = json.loads(path.read_text())
        from fractions import Fraction
        assert code == 0 and Fraction(data["max_std_delta"]) <= Fraction(1, 4)

    @pytest.mark.parametrize(
        "args",
        [
            ["verify-model", "--format", "p=3", "--mode", "up"],
            ["verify-model", "--format", "p=1"],
            ["verify-model"],
            ["analyze", "--format", "24", "--expr", "x +"],
            ["analyze", "--format", "24", "--expr", "x*q"],
            ["analyze", "--format", "24", "--expr", "x", "--work-bits", "5000"],
            ["demo-innerprod", "--format", "3", "--n", "2", "--vectors", "/nonexistent/v.json"],
            ["frobnicate"],
        ],
    )
    def test_usage_errors(self, args, capsys):
        with pytest.raises(SystemExit) as exc:
            code = main(args)
            raise SystemExit(code)
        assert exc.value.code == 1

    def test_analyze(self, env_file, capsys):
        code, out, _ = run(["analyze", "--format", "24", "--expr", "x*y", "--env", env_file], capsys)
        assert code == 0 and "1/16777215" in out

    def test_analyze_failed(self, env_file, capsys):
        code, _, err = run(["analyze", "--format", "24", "--expr", "x-y", "--env", env_file], capsys)
        assert code == 4 and "sign condition unsatisfiable" in err

    def test_compare_higham(self, env_file, capsys):
        code, out, _ = run(CASES["analyze"][:-3] + [env_file, "--compare-higham", "10"], capsys)
        assert code == 0 and "nu/(1-nu)" in out and "nu/(1-(n+1)u)" in out

    def test_demo_vectors(self, tmp_path, capsys):
        path = tmp_path / "v.json"
        path.write_text(json.dumps([{"x": ["5/4", "5/4"], "y": ["5/4", "5/4"]}, {"x": ["1", "0"], "y": ["1", "1"]}]))
        code, out, _ = run(["demo-innerprod", "--format", "3", "--n", "2", "--vectors", str(path)], capsys)
        assert code == 0
        assert "rejected: 1" in out and "s'_k = 3/1" in out

    def test_demo_exhaustive_p3(self, capsys):
        code, out, _ = run(["verify-innerprod", "--format", "3", "--n-max", "2", "--exhaustive"], capsys)
        assert code == 0 and "instances: 1056" in out

    def test_counterexamples(self, capsys):
        code, out, _ = run(["counterexamples"], capsys)
        assert code == 0
        assert "1/10" in out and "1/11" in out and "reproduced: True" in out


@pytest.mark.parametrize("name", sorted(CASES))
def test_json_is_deterministic(name, env_file, tmp_path, capsys):
    args = fill(CASES[name], env_file)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(args + ["--json", str(a)], capsys)
    run(args + ["--json", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["schema"] == 1


@pytest.mark.parametrize("name", sorted(CASES))
def test_printed_rationals_appear_in_json(name, env_file, tmp_path, capsys):
    path = tmp_path / "o.json"
    _, out, _ = run(fill(CASES[name], env_file) + ["--json", str(path)], capsys)
    text = path.read_text()
    tokens = set(re.findall(r"-?\d+/\d+", out))
    assert tokens
    assert [t for t in tokens if f'"{t}"' not in text] == []


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "relprec.cli", "verify-model", "--format", "p=2", "--mode", "bogus"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 1 and "usage" in proc.stderr
