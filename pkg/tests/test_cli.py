import csv
import hashlib
import io
import json
import subprocess
import sys

import pytest

from eraser_sim.cli import CliError, main, parse_scenario


def write(tmp_path, text, name="scenario.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def call(*argv):
    out = io.StringIO()
    code = main(list(argv), stdout=out)
    return code, out.getvalue()


def test_parse_scenario():
    fixed, grid = parse_scenario("# header\nscheme = conditional\nt = 0.25  # filter\nT_BS=1\nm = 0.5\nseed = 3\n\n")
    assert fixed == {"scheme": "conditional", "t": 0.25, "t_bs": 1.0, "M": 0.5, "seed": 3}
    assert grid == {}
    fixed, grid = parse_scenario("t = 0:1:5\nt_bs = 0.1, 0.2")
    assert grid == {"t": [0.0, 0.25, 0.5, 0.75, 1.0], "t_bs": [0.1, 0.2]}
    for bad in ("t 0.5", "colour = red", "t = x", "t = 1\nt = 2", "seed = 1.5", "t ="):
        with pytest.raises(CliError):
            parse_scenario(bad)


def test_run_conditional(tmp_path):
    cfg = write(tmp_path, "scheme = conditional\nt = 0.25\nt_bs = 0.25\nm = 1\n")
    code, out = call("run", "--config", cfg)
    assert code == 0
    report = json.loads(out)
    assert report["simulated"]["V_QE_cond"] == pytest.approx(1.0, abs=1e-10)
    assert report["all_satisfied"] is True
    assert call("run", "--config", cfg)[1] == out


def test_run_degenerate_and_errors(tmp_path, capsys):
    cfg = write(tmp_path, "scheme = conditional\nt = 0\nt_bs = 0\n")
    code, out = call("run", "--config", cfg)
    assert code == 2 and json.loads(out)["degenerate"] is True
    assert call("run", "--config", str(tmp_path / "missing.txt"))[0] == 1
    assert "cannot read" in capsys.readouterr().err
    assert call("run")[0] == 1
    assert call("frobnicate")[0] == 1
    assert call()[0] == 1
    assert call("run", "--config", write(tmp_path, "scheme = conditional\nt = 2\n", "bad.txt"))[0] == 1
    assert call("run", "--config", write(tmp_path, "t = 0,1\n", "list.txt"))[0] == 1


def test_run_writes_file_and_csv(tmp_path):
    cfg = write(tmp_path, "scheme = double_partial\nt1 = 0.5\nt2 = 0.5\n")
    out = tmp_path / "report.csv"
    code, stdout = call("run", "--config", cfg, "--format", "csv", "--out", str(out))
    assert code == 0 and stdout == ""
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 1 and float(rows[0]["V_QE_cond"]) == pytest.approx(1.0)


def test_sweep_fig4(tmp_path):
    cfg = write(tmp_path, "scheme = conventional\nm = 0.5\nt = 0:1:21\n")
    code, out = call("sweep", "--config", cfg)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 21
    for row in rows:
        P = float(row["P"])
        assert float(row["C_sq_plus_P_sq"]) == pytest.approx(P**2 + 0.25 * (1 - P**2), abs=1e-12)
        assert float(row["C_sq"]) + float(row["P_sq"]) == pytest.approx(float(row["C_sq_plus_P_sq"]), abs=1e-15)
    code, js = call("sweep", "--config", cfg, "--format", "json")
    assert code == 0 and len(json.loads(js)) == 21


def test_sweep_empty_grid(tmp_path):
    assert call("sweep", "--config", write(tmp_path, "scheme = conventional\nt = 0.5\n"))[0] == 1
    assert call("sweep", "--config", write(tmp_path, "t = 0:1:0\n", "e.txt"))[0] == 1


def test_sample_is_deterministic(tmp_path, monkeypatch):
    cfg = write(tmp_path, "scheme = conventional\nt = 1\nm = 1\n")
    code, a = call("sample", "--config", cfg, "--samples", "100000", "--seed", "7")
    monkeypatch.setenv("ERASER_SIM_THREADS", "3")
    _, b = call("sample", "--config", cfg, "--samples", "100000", "--seed", "7")
    assert code == 0
    assert hashlib.sha256(a.encode()).hexdigest() == hashlib.sha256(b.encode()).hexdigest()
    _, c = call("sample", "--config", cfg, "--samples", "100000", "--seed", "8")
    assert c != a


def test_sample_fit_within_three_sigma(tmp_path):
    cfg = write(tmp_path, "scheme = conventional\nt = 0.25\nsamples = 1000000\nseed = 1\n")
    code, out = call("sample", "--config", cfg, "--format", "json")
    assert code == 0
    obj = json.loads(out)
    assert abs(obj["visibility"] - 0.8) < 3 * obj["stderr"]
    assert obj["total"] == 1_000_000


def test_sample_errors(tmp_path):
    assert call("sample", "--config", write(tmp_path, "t = 0.5\n"))[0] == 1
    degenerate = write(tmp_path, "scheme = conditional\nt = 0\nt_bs = 0\nsamples = 10\n", "d.txt")
    assert call("sample", "--config", degenerate)[0] == 2


def test_verify_single_and_fault(capsys):
    code, out = call("verify", "--only", "conditional-complementarity")
    assert code == 0
    assert out.startswith("PASS  conditional-complementarity") and "1/1 checks passed" in out
    code, out = call("verify", "--only", "double-partial", "--inject-fault")
    assert code == 3 and out.startswith("FAIL")
    assert call("verify", "--only", "nonexistent")[0] == 1
    assert call("verify", "--format", "csv")[0] == 1


def test_verify_json_output(tmp_path):
    out = tmp_path / "verify.json"
    code, _ = call("verify", "--only", "wootters-oracle", "--out", str(out))
    obj = json.loads(out.read_text())
    assert code == 0 and obj["passed"] is True and obj["checks"][0]["id"] == "wootters-oracle"


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, "scheme = conventional\nt = 0.25\n")
    proc = subprocess.run([sys.executable, "-m", "eraser_sim", "run", "--config", cfg],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["simulated"]["V_QE"] == pytest.approx(0.8)
