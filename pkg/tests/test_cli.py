import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from dtph import DescriptorSystem
from dtph.cli import EXIT_ASSERT, EXIT_OK, EXIT_USAGE, main
from dtph.sysmodel import load_system, save_system

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"


def _sys_file(tmp_path, s, name="s.json"):
    p = tmp_path / name
    save_system(s, p)
    return str(p)


def test_classify_table_and_assert(capsys):
    f = str(SYSTEMS / "forced_zero.json")
    assert main(["classify", f]) == EXIT_OK
    out = capsys.readouterr().out
    assert "d-sKYP => d-spH [O1] (black): counterexample" in out
    assert main(["classify", f, "--assert", "d-sPa"]) == EXIT_OK
    assert main(["classify", f, "--assert", "d-spH"]) == EXIT_ASSERT
    assert main(["classify", f, "--assert", "bogus"]) == EXIT_USAGE


def test_classify_json(tmp_path, capsys):
    f = str(SYSTEMS / "unit_transfer.json")
    rep = tmp_path / "r.json"
    assert main(["classify", f, "--format", "json", "--json", str(rep), "--angles", "8"]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert d["verdicts"]["d-BR"] is True and d["verdicts"]["d-sKYP"] is False
    assert json.loads(rep.read_text())["system_hash"] == d["system_hash"]


def test_to_ph(tmp_path, capsys):
    f = str(SYSTEMS / "contraction.json")
    out_sys = tmp_path / "ph.json"
    assert main(["to-ph", f, "--out-system", str(out_sys), "--assert"]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert d["is_ph"] and d["representation"]["norm_value"] <= 1 + 1e-8
    t = load_system(out_sys)
    assert t.meta["operation"] == "to-ph"
    assert main(["to-ph", str(SYSTEMS / "forced_zero.json"), "--assert"]) == EXIT_ASSERT


def test_cayley_twice_round_trips(tmp_path):
    f = str(SYSTEMS / "contraction.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["cayley", f, "--direction", "scat->imp", "--out", str(a)]) == EXIT_OK
    assert main(["cayley", str(a), "--direction", "imp->scat", "--out", str(b)]) == EXIT_OK
    s0, s2 = load_system(f), load_system(b)
    for k in "EABCD":
        assert np.allclose(getattr(s0, k), getattr(s2, k), atol=1e-12)
    assert load_system(a).meta["source_hash"] == s0.content_hash()


def test_cayley_singular_is_usage_error(capsys):
    assert main(["cayley", str(SYSTEMS / "algebraic.json"), "--direction", "imp->scat"]) == EXIT_USAGE
    assert "I + D" in capsys.readouterr().err


def test_discretize(tmp_path):
    out = tmp_path / "d.json"
    assert main(["discretize", str(SYSTEMS / "continuous_decay.json"), "--alpha", "2", "--out", str(out)]) == EXIT_OK
    d = load_system(out)
    assert d.A[0, 0] == pytest.approx(1 / 3) and d.time_domain == "discrete"
    assert main(["discretize", str(SYSTEMS / "contraction.json"), "--alpha", "2"]) == EXIT_USAGE


def test_simulate_csv(tmp_path, capsys):
    f = _sys_file(tmp_path, DescriptorSystem(1, 0.5, 0.5, 0, 1))
    c = tmp_path / "t.csv"
    assert main(["simulate", f, "--steps", "5", "--x0", "1", "--out-csv", str(c),
                 "--storage", "auto", "--assert"]) == EXIT_OK
    rows = list(csv.DictReader(c.open()))
    assert [float(r["x0"]) for r in rows] == pytest.approx(2.0 ** -np.arange(5))
    d = json.loads(capsys.readouterr().out)
    assert d["audit"]["verdict"] == "dissipative-on-trajectory"


def test_simulate_inputs_and_violation(tmp_path, capsys):
    f = _sys_file(tmp_path, DescriptorSystem(1, 2.0, 1, 1, 0))
    X = tmp_path / "X.json"
    X.write_text("[[1.0]]")
    u = tmp_path / "u.csv"
    u.write_text("# input\n0\n0\n0\n")
    assert main(["simulate", f, "--input", str(u), "--x0", "1", "--storage", str(X),
                 "--supply", "impedance", "--assert"]) == EXIT_ASSERT
    assert main(["simulate", f, "--input", "const:1", "--steps", "3"]) == EXIT_OK
    assert main(["simulate", f, "--storage", "auto", "--steps", "3"]) == EXIT_USAGE
    capsys.readouterr()
    assert main(["simulate", f, "--x0", "1,0", "--steps", "3"]) == EXIT_USAGE
    assert "--x0 has 2 entries" in capsys.readouterr().err


def test_transfer_points_and_realness(tmp_path, capsys):
    f = str(SYSTEMS / "zero_transfer.json")
    assert main(["transfer", f, "--points", "2;1+1j", "--realness", "positive", "--assert"]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert len(d["values"]) == 2 and d["realness"]["holds_on_grid"]
    g = _sys_file(tmp_path, DescriptorSystem(1, 0.5, 0, 1, 2))
    assert main(["transfer", g, "--grid", "--angles", "4", "--realness", "bounded", "--assert"]) == EXIT_ASSERT
    assert main(["transfer", f, "--points", "0.5", "--realness", "positive"]) == EXIT_USAGE


def test_bad_files(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["classify", str(p)]) == EXIT_USAGE
    assert main(["classify", str(tmp_path / "missing.json")]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["classify", str(p), "--radii", "0.5"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "dtph.cli", "classify", str(SYSTEMS / "contraction.json"),
                        "--format", "json", "--angles", "8"], capture_output=True, text=True, timeout=120)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["verdicts"]["d-spH"] is True
