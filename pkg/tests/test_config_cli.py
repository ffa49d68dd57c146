import csv
import io
import json

import pytest
import yaml

from mmwsim.cli import main
from mmwsim.config import ConfigError, env_overrides, load_config, parse_bits, scenario_from_dict, scenario_to_dict
from mmwsim.sim import Scenario


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="densty"):
        scenario_from_dict({"densty": 10})
    with pytest.raises(ConfigError, match="radio"):
        scenario_from_dict({"radio": {"power": 1}})


@pytest.mark.parametrize("value, expected", [("inf", None), (None, None), (float("inf"), None), (4, 4), ("8", 8)])
def test_parse_bits(value, expected):
    assert parse_bits(value) == expected


@pytest.mark.parametrize("value", [0, -2, 2.5, "many"])
def test_parse_bits_rejects(value):
    with pytest.raises(ConfigError):
        parse_bits(value)


def test_echo_round_trip(tmp_path):
    s = Scenario(pattern="tabulated", density=75.0, bits=5, seed=9, drops=12)
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump(scenario_to_dict(s)))
    assert scenario_to_dict(load_config(path)) == scenario_to_dict(s)


def test_env_seed_override():
    assert env_overrides({"MMWSIM_SEED": "42"}) == {"seed": 42}
    assert env_overrides({}) == {}
    with pytest.raises(ConfigError):
        env_overrides({"MMWSIM_SEED": "x"})


def test_pattern_cut_3gpp(capsys):
    code, out, _ = _run(capsys, "pattern-cut", "--pattern", "3gpp", "--steer", "0")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 361
    peak = max(rows, key=lambda r: float(r["array_db"]))
    assert float(peak["phi_deg"]) == 0.0
    assert float(peak["array_db"]) == pytest.approx(26.0618, abs=1e-4)


def test_pattern_cut_iso_element_zero(capsys):
    code, out, _ = _run(capsys, "pattern-cut", "--pattern", "iso")
    assert code == 0
    assert {float(r["element_db"]) for r in csv.DictReader(io.StringIO(out))} == {0.0}


def test_pattern_cut_scan_loss(capsys):
    _, out, _ = _run(capsys, "pattern-cut", "--pattern", "3gpp", "--steer", "0,60")
    rows = list(csv.DictReader(io.StringIO(out)))
    by = {s: [r for r in rows if r["steer_deg"] == s] for s in ("0", "60")}
    p0 = max(by["0"], key=lambda r: float(r["array_db"]))
    p60 = max(by["60"], key=lambda r: float(r["array_db"]))
    assert float(p60["array_db"]) < float(p0["array_db"]) - 5
    # the element roll-off pulls the peak a few degrees towards boresight
    assert 45 <= float(p60["phi_deg"]) <= 60


def test_run_json(capsys, tmp_path):
    argv = ["run", "--pattern", "3gpp", "--drops", "30", "--seed", "4", "--bits", "3,4,8,inf", "--threads", "2"]
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    doc = json.loads(out)
    assert [r["bits"] for r in doc["results"]] == [3, 4, 8, "inf"]
    assert doc["scenario"]["seed"] == 4
    assert all(r["drops"] == 30 for r in doc["results"])
    assert {"sinr_q5_db", "sinr_q50_db", "noise_limited_probability"} <= set(doc["results"][0])
    # identical bytes on rerun, with any thread count
    _, again, _ = _run(capsys, *argv[:-1], "1")
    assert again == out


def test_run_echo_is_loadable(capsys, tmp_path):
    _, out, _ = _run(capsys, "run", "--drops", "3", "--density", "40")
    cfg = tmp_path / "echo.yaml"
    cfg.write_text(yaml.safe_dump(json.loads(out)["scenario"]))
    assert scenario_to_dict(load_config(cfg)) == scenario_to_dict(Scenario(drops=3, density=40.0))


def test_run_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("MMWSIM_SEED", "77")
    _, out, _ = _run(capsys, "run", "--drops", "2")
    assert json.loads(out)["scenario"]["seed"] == 77


def test_run_ecdf_csv(capsys, tmp_path):
    path = tmp_path / "e.csv"
    assert _run(capsys, "run", "--drops", "10", "--ecdf-csv", str(path))[0] == 0
    rows = list(csv.DictReader(path.open()))
    assert {r["metric"] for r in rows} == {"sinr", "inr"}


def test_sweep_rows(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = _run(
        capsys, "sweep", "--densities", "25,50", "--patterns", "iso,3gpp", "--drops", "5", "--out", str(out)
    )
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    assert {(r["pattern"], r["density_per_km2"]) for r in rows} == {
        ("iso", "25"), ("iso", "50"), ("3gpp", "25"), ("3gpp", "50")
    }


def test_sweep_empty_density_list(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--densities", ""])
    assert exc.value.code == 2


def test_sweep_needs_axis(capsys):
    assert _run(capsys, "sweep", "--drops", "2")[0] == 2


def test_bad_config_exit_code(capsys, tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("pattern: 3gpp\nfoo: 1\n")
    code, _, err = _run(capsys, "run", "--config", str(cfg))
    assert code == 2
    assert "foo" in err


def test_bad_pattern_file_exit_code(capsys, tmp_path):
    bad = tmp_path / "p.csv"
    bad.write_text("theta_deg,phi_deg,gain_dbi\n0,0,x\n")
    code, _, err = _run(capsys, "run", "--pattern", "tabulated", "--pattern-file", str(bad), "--drops", "1")
    assert code == 2
    assert "p.csv:2" in err


def test_unwritable_output_exit_code(capsys, tmp_path):
    code, _, _ = _run(capsys, "pattern-cut", "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == 3
