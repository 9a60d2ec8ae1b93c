import csv
import subprocess
import sys

import pytest

from evohj import cli
from evohj.exceptions import NoEssFound, NonConvergence

SYM = """# symmetric, strong migration
r1 = 3
r2 = 3
g1 = 1
g2 = 1
theta = 0.5
kappa1 = 1
kappa2 = 1
m1 = 2
m2 = 2
eps_list = 0.2, 0.1, 0.05, 0.025
"""

BENCH = SYM.replace("r1 = 3", "r1 = 2").replace("r2 = 3", "r2 = 1.5").replace("g2 = 1", "g2 = 2") \
    .replace("m1 = 2", "m1 = 0.5").replace("m2 = 2", "m2 = 0.7")


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def run(tmp_path, *args, text=SYM):
    cfg = write(tmp_path, text)
    return cli.main([args[0], "--config", str(cfg), "--out", str(tmp_path / "out"), *args[1:]])


def test_ess_subcommand(tmp_path, capsys):
    assert run(tmp_path, "ess") == 0
    rows = read(tmp_path / "out" / "ess.csv")
    assert rows[0] == list(cli.ESS_COLUMNS)
    assert float(rows[1][1]) == pytest.approx(0.0, abs=1e-12)
    assert float(rows[1][4]) == pytest.approx(2.75, abs=1e-10)
    assert "monomorphic" in capsys.readouterr().out


def test_expand_subcommand(tmp_path):
    assert run(tmp_path, "expand") == 0
    rows = read(tmp_path / "out" / "expand.csv")
    assert len(rows) == 3
    assert float(rows[1][cli.EXPAND_COLUMNS.index("K_star")]) == pytest.approx(-0.8660254, rel=1e-6)


def test_solve_subcommand(tmp_path):
    assert run(tmp_path, "solve", "--eps", "0.1") == 0
    rows = read(tmp_path / "out" / "profile.csv")
    assert rows[0] == ["z", "n1", "n2"]
    assert len(rows) > 128


def test_compare_subcommand_passes_symmetric(tmp_path):
    assert run(tmp_path, "compare") == 0
    rows = read(tmp_path / "out" / "compare.csv")
    slopes = [r for r in rows if r[0] == "slope"]
    assert {r[5] for r in slopes} <= {"pass", "report"}
    assert any(r[2] == "skewness" and r[5] == "report" for r in slopes)


def test_compare_fails_on_unseparated_benchmark(tmp_path):
    assert run(tmp_path, "compare", text=BENCH) == cli.EXIT_SLOPE


def test_compare_needs_three_eps(tmp_path):
    assert run(tmp_path, "compare", "--eps", "0.1") == cli.EXIT_CONFIG


def test_sweep_subcommand(tmp_path):
    assert run(tmp_path, "sweep", "--param", "m1", "--values", "0.05,2.0") == 0
    rows = read(tmp_path / "out" / "sweep.csv")
    assert rows[0] == list(cli.SWEEP_COLUMNS)
    assert {r[2] for r in rows[1:]} == {"monomorphic", "dimorphic"}
    assert run(tmp_path, "sweep", "--param", "m2", "--range", "1,2,3") == 0
    assert run(tmp_path, "sweep", "--param", "bogus", "--values", "1") == cli.EXIT_CONFIG


@pytest.mark.parametrize("text", [
    SYM.replace("m1 = 2", "m1 = 0"),
    SYM.replace("m1 = 2", "mu = 2"),
    SYM + "m2 = 3\n",
    SYM.replace("theta = 0.5", "theta = abc"),
])
def test_bad_configuration_exits_1(tmp_path, text):
    assert run(tmp_path, "ess", text=text) == cli.EXIT_CONFIG


def test_usage_error_exits_1(tmp_path):
    assert cli.main(["ess"]) == cli.EXIT_CONFIG
    assert cli.main(["nonsense", "--config", "x"]) == cli.EXIT_CONFIG


def test_degenerate_ess_exits_3(tmp_path):
    text = SYM.replace("m1 = 2", "m1 = 0.5").replace("m2 = 2", "m2 = 0.5")
    assert run(tmp_path, "expand", text=text) == cli.EXIT_EXPANSION


def test_no_ess_exits_2(tmp_path, monkeypatch):
    def fail(*a, **k):
        raise NoEssFound("none")

    monkeypatch.setattr(cli, "find_ess", fail)
    assert run(tmp_path, "ess") == cli.EXIT_NO_ESS


def test_solver_failure_exits_5(tmp_path, monkeypatch):
    def fail(*a, **k):
        raise NonConvergence("stalled")

    monkeypatch.setattr(cli, "solve_steady", fail)
    assert run(tmp_path, "solve") == cli.EXIT_SOLVER


def test_compare_output_is_deterministic(tmp_path):
    cfg = write(tmp_path, SYM)
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert cli.main(["compare", "--config", str(cfg), "--out", str(out)]) == 0
        outs.append((out / "compare.csv").read_bytes())
    assert outs[0] == outs[1]


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, SYM)
    proc = subprocess.run([sys.executable, "-m", "evohj.cli", "ess", "--config", str(cfg),
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
