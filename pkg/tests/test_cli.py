import io
import math

import numpy as np
import pytest

from hedge_da.cli import main
from hedge_da.simulation import read_tape_csv, write_tape_csv
from hedge_da.variants import VARIANTS

COMMON = ["--n", "3", "--T", "40", "--period", "10", "--runs", "2", "--stride", "5"]


def cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, dict(line.split(" = ", 1) for line in out.getvalue().splitlines())


def test_bound_optimal():
    code, out = cli("bound", "optimal", "--n", "30", "--T", "31200", "--mu", "0.5133", "--rho", "0.5175")
    assert code == 0
    assert float(out["stated"]) == pytest.approx(0.005381, abs=5e-7)
    assert float(out["derived"]) == pytest.approx(0.007610, abs=5e-7)
    assert float(out["ratio"]) == pytest.approx(math.sqrt(2), rel=1e-12)
    assert float(out["generic"]) == pytest.approx(float(out["derived"]), rel=1e-12)


def test_bound_fs_and_time_independent():
    args = ["--n", "30", "--T", "31200", "--mu", "0.5133", "--rho", "0.5175"]
    assert float(cli("bound", "fs", *args)[1]["stated"]) == pytest.approx(0.0153328391132642839, rel=1e-12)
    code, out = cli("bound", "time-independent", *args)
    assert code == 0 and float(out["stated"]) <= float(out["relaxed"])


def test_bound_aggressive_short_horizon(capsys):
    assert main(["bound", "aggressive", "--n", "30", "--T", "6", "--mu", "0.5", "--rho", "0.5"]) == 2
    assert "requires T > 6" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["bound", "optimal", "--n", "30", "--T", "100"],
    ["frobnicate"],
    ["run", "--variants", "fast"],
    ["bound", "optimal", "--mu", "0.5", "--rho", "0.5"],
])
def test_usage_errors(argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_bad_parameters_exit_2():
    assert main(["bound", "optimal", "--n", "30", "--T", "100", "--mu", "-1", "--rho", "0.5"]) == 2


def test_certify_constant_tape(tmp_path):
    tape = write_tape_csv(tmp_path / "c.csv", np.full((20, 3), 0.1))
    for variant in VARIANTS:
        code, out = cli("certify", str(tape), variant)
        assert code == 0 and out["satisfied"] == "true"
        assert float(out["empirical_regret"]) == pytest.approx(0, abs=1e-12)


def test_generate_then_certify(tmp_path):
    code, out = cli("generate", *COMMON, "--out", str(tmp_path), "--seed", "3")
    assert code == 0
    tape = out["tape"]
    for variant in VARIANTS:
        assert cli("certify", tape, variant)[0] == 0


def test_certify_corrupted_tape(tmp_path, capsys):
    cli("generate", *COMMON, "--out", str(tmp_path))
    path = tmp_path / "tape_000.csv"
    losses = read_tape_csv(path)
    losses[7, 2] = 10.0
    write_tape_csv(path, losses)
    assert main(["certify", str(path), "optimal"]) == 2
    assert "step 7 for product 2" in capsys.readouterr().err


def test_certify_unparseable_tape(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("t,p1\n0,1\n1,x\n")
    assert main(["certify", str(path), "optimal"]) == 2
    assert main(["certify", str(tmp_path / "missing.csv"), "optimal"]) == 2


def test_certify_explicit_bounds(tmp_path):
    tape = write_tape_csv(tmp_path / "c.csv", np.array([[0.1, -0.2], [0.3, 0.0]]))
    assert cli("certify", str(tape), "original", "--mu", "0.5", "--rho", "0.5")[0] == 0
    assert main(["certify", str(tape), "original", "--mu", "0.5"]) == 1


def test_run_and_emit_plot(tmp_path):
    code, out = cli("run", *COMMON, "--out", str(tmp_path), "--variants", "optimal,aggressive")
    assert code == 0
    assert open(out["trajectories"]).readline().strip() == "t,optimal,aggressive,best"
    code, plot = cli("emit-plot", "--from", out["trajectories"])
    assert code == 0
    rows = open(plot["plot_data"]).read().splitlines()
    assert len(rows) == 1 + 3 * 8


def test_run_replays_tapes(tmp_path):
    _, gen = cli("generate", *COMMON, "--out", str(tmp_path / "g"))
    code, out = cli("run", *COMMON, "--out", str(tmp_path / "r"), "--tapes", gen["tape"])
    assert code == 0
    assert "1/1" in open(out["summary"]).read()


def test_config_file_and_flags(tmp_path):
    conf = tmp_path / "c.conf"
    conf.write_text("n = 3\nT = 20\nperiod = 10\nruns = 1\n")
    code, out = cli("generate", "--config", str(conf), "--out", str(tmp_path / "o"), "--T", "30")
    assert code == 0
    assert len(open(out["tape"]).read().splitlines()) == 31
    conf.write_text("n = 3\nnonsense\n")
    assert main(["generate", "--config", str(conf), "--out", str(tmp_path)]) == 2


def test_certify_prints_plain_floats(tmp_path):
    tape = write_tape_csv(tmp_path / "c.csv", np.array([[0.1, -0.2], [0.3, 0.0]]))
    _, out = cli("certify", str(tape), "aggressive")
    for key in ("empirical_regret", "generic_rhs"):
        float(out[key])
