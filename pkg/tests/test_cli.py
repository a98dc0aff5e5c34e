import json
import subprocess
import sys

import pytest

from fpcaband import io as fio
from fpcaband.cli import ConfigError, load_config, main

TECATOR = str(fio.tecator_path())


def test_band_rerun_identical(tmp_path):
    args = ["band", "--data", TECATOR, "--m", "5", "--tau1", "0.1", "--tau2", "0.1", "--seed", "7", "--B", "20000"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    meta = fio.read_metadata(tmp_path / "a.csv")
    assert meta["m"] == "5" and meta["seed"] == "7" and meta["B"] == "20000" and meta["kind"] == "proposed"
    assert len(fio.read_table(tmp_path / "a.csv")) == 100
    assert main(args[:-2] + ["--seed", "8", "--out", str(tmp_path / "c.csv")]) == 0
    assert (tmp_path / "c.csv").read_bytes() != a


def test_ms_band(tmp_path):
    assert main(["band", "--data", TECATOR, "--m", "5", "--kind", "ms", "--out", str(tmp_path / "ms.csv")]) == 0
    meta = fio.read_metadata(tmp_path / "ms.csv")
    assert meta["kind"] == "ms" and "c_n" not in meta


def test_select_cutoff(capsys):
    assert main(["select-cutoff", "--data", TECATOR]) == 0
    out = dict(line.split("=") for line in capsys.readouterr().out.split())
    assert out == {"mhat": "5", "mhat_plus_one": "6", "mhat_max_two": "5"}


def test_fit_output(capsys):
    assert main(["fit", "--data", TECATOR, "--m", "6"]) == 0
    lines = dict(line.split("=") for line in capsys.readouterr().out.split())
    assert lines["n"] == "215" and lines["m"] == "6"
    assert float(lines["sigma2"]) == pytest.approx(8.5849, abs=1e-3)
    assert sum(k.startswith("b_") for k in lines) == 6


def test_fit_uses_rule_when_m_missing(capsys):
    assert main(["--mode", "fit", "--data", TECATOR, "--rule", "mhat_max_two"]) == 0
    assert "m=5" in capsys.readouterr().out.split()


def test_risk_curve(tmp_path):
    out = tmp_path / "risk.csv"
    assert main(["risk-curve", "--data", TECATOR, "--candidates", "1-8", "--out", str(out)]) == 0
    rows = fio.read_table(out)
    assert [r["m"] for r in rows] == [str(m) for m in range(1, 9)]
    assert fio.read_metadata(out)["argmin"] == "5"


def test_simulate_smoke(tmp_path):
    out = tmp_path / "study.csv"
    assert main(["simulate", "--preset", "smoke", "--R", "4", "--out", str(out)]) == 0
    rows = fio.read_table(out)
    assert {"ucp", "mcp", "max_width", "mean_width", "oracle_m"} <= set(rows[0])
    assert len(rows) == 4 and all(0 <= float(r["mcp"]) <= 1 for r in rows)
    meta = fio.read_metadata(out)
    assert meta["R"] == "4" and meta["B"] == "2000" and meta["preset"] == "smoke"
    assert (tmp_path / "study_rmse.csv").exists()


def test_config_file_with_overrides(tmp_path):
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps({"mode": "band", "data": TECATOR, "m": 4, "tau1": 0.05, "candidates": [1, 2, 3]}))
    cfg = load_config(["--config", str(cfg_path), "--m", "6"])
    assert cfg.mode == "band" and cfg.m == 6 and cfg.tau1 == 0.05 and cfg.candidates == (1, 2, 3)
    assert load_config(["fit", "--config", str(cfg_path)]).mode == "fit"


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"mode": "fit", "colour": "red"}))
    for argv in (
        ["fit", "--mode", "band", "--data", TECATOR],
        ["fit", "--data", TECATOR, "--bogus"],
        ["fit", "--data", TECATOR, "--tau1", "1.5"],
        ["fit"],
        ["dance", "--data", TECATOR],
        ["band", "--data", TECATOR, "--B", "10"],
        ["fit", "--data", TECATOR, "--lower", "0"],
        ["--config", str(bad)],
        ["--config", str(tmp_path / "missing.json")],
        ["simulate", "--preset", "huge"],
    ):
        assert main(argv) == 2, argv
    assert "error" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        load_config(["fit"])


def test_runtime_errors(tmp_path):
    assert main(["fit", "--data", TECATOR, "--m", "500"]) == 1
    assert main(["fit", "--data", str(tmp_path / "missing.csv")]) == 1
    (tmp_path / "bad.csv").write_text("y,x_1,x_2\n1,a,2\n")
    assert main(["fit", "--data", str(tmp_path / "bad.csv")]) == 1


def test_domain_override_changes_band(tmp_path):
    base = ["band", "--data", TECATOR, "--m", "5", "--B", "2000"]
    main(base + ["--out", str(tmp_path / "a.csv")])
    main(base + ["--lower", "0", "--upper", "1", "--out", str(tmp_path / "b.csv")])
    assert fio.read_metadata(tmp_path / "b.csv")["upper_bound"] == "1.0"


def test_convert_tecator(tmp_path):
    src = tmp_path / "in.csv"
    header = ",".join([f"x_{k:03d}" for k in range(1, 101)] + ["fat"])
    src.write_text(header + "\n" + ",".join(["1.5"] * 100 + ["9.0"]) + "\n")
    assert main(["convert-tecator", "--data", str(src), "--out", str(tmp_path / "out.csv")]) == 0
    assert fio.read_dataset(tmp_path / "out.csv").responses.tolist() == [9.0]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fpcaband", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "select-cutoff" in res.stdout
