import csv
import json

import pytest

from twopeak import cli, config, driver
from twopeak.potentials import ParameterError

TOML = """
eps = [0.04, 0.02, 0.01]
h = 0.25
relative_modes = true

[potentials]
J1 = "1.5 - 0.5*exp(-(x1^2+2*x2^2))"
K1 = "1.5 - 0.5*exp(-(x1^2+2*x2^2))"

[multiplicity]
eps = 0.02
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text(TOML)
    return p


def test_load_config(cfg_path):
    cfg = config.load(cfg_path)
    assert cfg.eps == [0.04, 0.02, 0.01] and cfg.h == 0.25 and cfg.relative_modes
    assert cfg.J1.startswith("1.5") and cfg.J2 == "1"
    assert cfg.multiplicity["eps"] == 0.02 and "J1" in cfg.multiplicity
    cfg = config.load(cfg_path, eps=[0.02, 0.01, 0.005], h=None)
    assert cfg.eps == [0.02, 0.01, 0.005] and cfg.h == 0.25


def test_config_errors(tmp_path):
    with pytest.raises(ParameterError):
        config.from_dict({"nonsense": 1})
    with pytest.raises(ParameterError):
        config.from_dict({"potentials": {"L1": "1"}})
    with pytest.raises(ParameterError):
        config.from_dict({"beta": 0.5})
    bad = tmp_path / "bad.toml"
    bad.write_text("eps = [0.01, 0.02, 0.04]\n")
    assert cli.main(["profile", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_profile_and_landscape(tmp_path):
    assert cli.main(["profile", "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "results.json").read_text())
    assert res["c0_paper_half"] == pytest.approx(2 * res["c0_nehari_quarter"])
    assert (tmp_path / "profile.dat").exists()
    assert cli.main(["landscape", "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "results.json").read_text())
    assert [c["kind"] for c in res["landscape"]["critical_points"]] == ["min"]


def test_ansatz_check_deterministic(tmp_path, cfg_path):
    args = ["ansatz-check", "--config", str(cfg_path), "--snapshots"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "results.json").read_bytes()
    assert a == (tmp_path / "b" / "results.json").read_bytes()
    lines = (tmp_path / "a" / "grad_norm.dat").read_text().splitlines()
    assert lines[0].startswith("#") and len(lines) == 4
    assert len(lines[1].split()) == 2
    assert (tmp_path / "a" / "ansatz_eps0.01.npz").exists()
    side = json.loads((tmp_path / "a" / "ansatz_eps0.01.json").read_text())
    assert side["epsilon"] == 0.01


def test_sweep_outputs(tmp_path, cfg_path):
    assert cli.main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == driver.SWEEP_COLUMNS
    assert len(rows) == 4
    assert (tmp_path / "grad_norm.dat").exists() and (tmp_path / "w_norm.dat").exists()
    res = json.loads((tmp_path / "results.json").read_text())
    assert "grad_norm" in res["sweep"]["slopes"]


def test_reduce_and_solve(tmp_path, cfg_path):
    assert cli.main(["reduce", "--config", str(cfg_path), "--eps", "0.04,0.02,0.01",
                     "--out", str(tmp_path), "--snapshots"]) == 0
    res = json.loads((tmp_path / "results.json").read_text())
    assert all("sample" in r for r in res["rows"])
    assert cli.main(["solve", "--config", str(cfg_path), "--eps", "0.04,0.03,0.02",
                     "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "results.json").read_text())
    assert all(r["status"] == "converged" for r in res["records"])
    assert (tmp_path / "solution_eps0.02.npz").exists()


def test_verify_exit_codes(tmp_path, capsys):
    assert cli.main(["verify", "--only", "1,3", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 2
    res = json.loads((tmp_path / "results.json").read_text())
    assert res["passed"] is True
    assert cli.main(["verify", "--only", "10", "--grid-h", "0.25", "--out", str(tmp_path)]) == 1
    assert "[FAIL] 10" in capsys.readouterr().out
