import subprocess
import sys

import pytest

from stbc4x4.cli import build_parser, main
from stbc4x4.code import make_proposed_code, read_code


def test_mindet(capsys):
    assert main(["mindet", "--spread", "2"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "min |det| = 16"


def test_mindet_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert main(["mindet", "--spread", "2", "--phi", "0", "--out",
                 str(out)]) == 0
    head, row = out.read_text().strip().splitlines()
    assert head == "spread,phi,min_abs_det,count_examined,argmin"
    assert float(row.split(",")[2]) < 16


def test_mindet_sample(capsys):
    assert main(["mindet", "--spread", "14", "--sample", "5000"]) == 0


def test_mindet_custom_code(tmp_path, capsys):
    path = tmp_path / "code.txt"
    assert main(["export-code", "--out", str(path)]) == 0
    assert read_code(path) == make_proposed_code()
    assert main(["mindet", "--spread", "2", "--code", str(path)]) == 0
    assert "min |det| = 16" in capsys.readouterr().out


def test_papr(tmp_path, capsys):
    out = tmp_path / "p.csv"
    assert main(["papr", "--m", "64", "--out", str(out)]) == 0
    assert "PAPR 3.68 dB" in capsys.readouterr().out
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "m,antenna,papr_db"
    assert len(rows) == 5


def test_verify_nvd(capsys):
    assert main(["verify-nvd", "--bound", "2"]) == 0
    assert capsys.readouterr().out.strip().endswith("PASS")


def test_verify_nvd_failure_exit_code(capsys):
    assert main(["verify-nvd", "--bound", "2", "--dioph-bound", "3",
                 "--phi", "0"]) == 1
    assert "counterexample" in capsys.readouterr().out


def test_decode_check(capsys):
    assert main(["decode-check", "--trials", "300", "--m", "4", "--nr", "2",
                 "--seed", "1"]) == 0
    out = capsys.readouterr().out
    assert "= 1.000000" in out
    assert "conditional 4, exhaustive 256" in out


def test_sweep_phi(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-phi", "--grid", "17", "--out", str(out)]) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "phi,min_abs_det"
    assert len(rows) == 18


def test_simulate(tmp_path, capsys):
    cfg = tmp_path / "sim.cfg"
    cfg.write_text("snr_db_list = 4, 8\nmax_trials = 2000\n"
                   "target_errors = 20\nmaster_seed = 5\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(b),
                 "--threads", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 3


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["mindet"],
    ["mindet", "--spread", "2", "--bogus"],
    ["papr", "--m", "four"],
    ["mindet", "--spread", "2", "--phi", "nan"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


@pytest.mark.parametrize("argv", [
    ["papr", "--m", "8"],
    ["mindet", "--spread", "8"],
    ["simulate", "--config", "/nonexistent/sim.cfg"],
    ["sweep-phi", "--grid", "4"],
])
def test_validation_errors(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_help_documents_units_and_defaults():
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    assert set(sub) == {"simulate", "mindet", "papr", "verify-nvd",
                        "decode-check", "sweep-phi", "export-code"}
    for name in ("mindet", "papr", "verify-nvd", "export-code"):
        text = sub[name].format_help()
        assert "radians" in text and "0.5*arccos(1/5)" in text
    assert "dB" in sub["simulate"].format_help()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stbc4x4", "papr", "--m", "16"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.strip() == "PAPR 2.55 dB (16-QAM)"
