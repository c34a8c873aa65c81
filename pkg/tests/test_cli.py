import hashlib
import json
import subprocess
import sys

import pytest

from recombchain import __version__, cli
from recombchain.errors import CheckReport

THREE_SITE = """{
  "sites": 3,
  "rho": {"[1]": "1/4", "[2,3]": "1/4", "[1,2]": "1/4", "[3]": "1/4"},
  "alphabet": [2, 2, 2],
  "mu": {"dense": ["1/8", "1/8", "1/16", "3/16", "1/4", "1/16", "1/16", "1/8"]},
  "n": 2,
  "horizon": 8,
  "simulate": {"seed": 11, "trajectories": 2000}
}
"""


@pytest.fixture
def problem(tmp_path):
    def write(text, name="problem.json"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("command", list(cli.COMMANDS))
@pytest.mark.parametrize("fmt", ["machine", "human"])
def test_every_command_succeeds(capsys, problem, command, fmt):
    code, out, err = run(capsys, command, problem(THREE_SITE), "--format", fmt)
    assert code == 0, err
    assert __version__ in out


def test_qsd_report_values(capsys, problem):
    path = problem(THREE_SITE)
    code, out, _ = run(capsys, "qsd", path)
    report = json.loads(out)
    assert code == 0
    assert report["eta"]["exact"] == "1/2"
    assert report["limit_constant"]["exact"] == "2"
    assert report["input_sha256"] == hashlib.sha256(THREE_SITE.encode()).hexdigest()
    assert report["version"] == __version__


def test_atoms_and_chain_reports(capsys, problem):
    path = problem(THREE_SITE)
    atoms = json.loads(run(capsys, "atoms", path)[1])
    assert atoms["atoms"] == [[1], [2], [3]]
    assert atoms["closure"] == [[1], [2], [3], [1, 2], [2, 3], [1, 2, 3]]
    chain = json.loads(run(capsys, "chain", path, "--horizon", "4")[1])
    assert [row["exact"] for row in chain["survival"]] == ["1", "1", "1/2", "1/4", "1/8"]


def test_identity_input_is_refused_for_qsd(capsys, problem):
    code, _, err = run(capsys, "qsd", problem('{"sites": 3, "rho": {"[1,2,3]": "1"}}'))
    assert code == 2
    assert "identity transformation; quasi-stationary analysis not applicable" in err


def test_validation_errors_exit_2_with_positions(capsys, problem):
    code, _, err = run(capsys, "atoms", problem('{"sites": 2,\n "rho": {"[1]": "1/4", "[2]": "1/4"}}'))
    assert code == 2 and "not-normalized" in err
    code, _, err = run(capsys, "atoms", problem('{"sites": 2,\n "rho": {"[1]": 0.5, "[2]": "1/2"}}'))
    assert code == 2 and "line 2" in err and "bad-rational" in err
    code, _, err = run(capsys, "atoms", problem('{"sites": 2,\n "rho": {"[1]": "1/2",\n "[4]": "1/2"}}'))
    assert code == 2 and "line 3, column 2" in err
    code, _, err = run(capsys, "atoms", problem('{"sites": 2,\n  "rho": {"[1]" "1/2"}}'))
    assert code == 2 and "line 2" in err and "parse-error" in err
    code, _, err = run(capsys, "evolve", problem('{"sites": 2, "rho": {"[1]": "1/2", "[2]": "1/2"}}'))
    assert code == 2 and "missing-measure" in err
    code, _, err = run(capsys, "atoms", problem("{}", "missing.json") + ".nope")
    assert code == 2


def test_resource_guards_exit_3(capsys, problem):
    path = problem(THREE_SITE)
    assert run(capsys, "chain", path, "--max-states", "2")[0] == 3
    assert run(capsys, "evolve", path, "--max-dense", "4")[0] == 3
    assert run(capsys, "evolve", path, "-n", "9")[0] == 3


def test_failed_identity_exits_4(capsys, problem, monkeypatch):
    broken = CheckReport("chain structure", failures=["forced failure"])
    monkeypatch.setattr(cli, "check_chain", lambda model: broken)
    code, _, err = run(capsys, "chain", problem(THREE_SITE))
    assert code == 4 and "forced failure" in err


def test_output_is_byte_identical(capsys, problem, tmp_path):
    path = problem(THREE_SITE)
    for command in ("simulate", "qsd", "evolve"):
        first, second = tmp_path / "a.txt", tmp_path / "b.txt"
        assert run(capsys, command, path, "--out", str(first))[0] == 0
        assert run(capsys, command, path, "--out", str(second))[0] == 0
        assert first.read_bytes() == second.read_bytes()


def test_simulate_flags_override_document(capsys, problem):
    path = problem(THREE_SITE)
    report = json.loads(run(capsys, "simulate", path, "--seed", "3", "--trajectories", "500",
                            "--mode", "kernel", "--horizon", "4")[1])
    assert (report["seed"], report["trajectories"], report["mode"], report["horizon"]) == (3, 500, "kernel", 4)
    assert report["survival"][0] == 500 and len(report["occupancy"]) == 5


def test_console_entry_point(problem):
    proc = subprocess.run([sys.executable, "-m", "recombchain.cli", "atoms", problem(THREE_SITE)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["atoms"] == [[1], [2], [3]]
