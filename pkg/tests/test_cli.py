import csv
import json
import subprocess
import sys

import pytest

from susyosc.cli import CHECKS, DEFAULT_TOLERANCES, RunConfig, main, parse_checks, ConfigError

TOP_KEYS = {"tool", "version", "command", "status", "exit_code", "error", "config",
            "tolerances", "admissibility", "checks", "artifacts", "sweep", "wall_time_s"}
CHECK_KEYS = {"status", "tolerance", "metrics", "detail", "wall_time_s"}


def run_cli(tmp_path, command, config=None, *extra, name="out"):
    out = tmp_path / name
    argv = [command, "--out", str(out), "--quiet"]
    if config is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    code = main(argv + list(extra))
    report = json.loads((out / "report.json").read_text())
    return code, report, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def check_schema(report):
    assert set(report) == TOP_KEYS
    assert set(report["checks"]) == set(CHECKS)
    for c in report["checks"].values():
        assert set(c) == CHECK_KEYS
    assert set(report["tolerances"]) == {"defaults", "overrides", "effective"}
    assert report["tolerances"]["defaults"] == DEFAULT_TOLERANCES


@pytest.fixture(scope="module")
def shifted_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("shift")
    cfg = {"factorizations": [{"epsilon": -0.5, "nu": 0.0}], "checks": "all"}
    return run_cli(tmp, "run", cfg)


def test_shifted_oscillator_full_run(shifted_run):
    code, report, out = shifted_run
    assert code == 0 and report["status"] == "ok"
    check_schema(report)
    assert all(c["status"] == "pass" for c in report["checks"].values())
    rows = read_csv(out / "spectrum.csv")
    energies = [float(r["energy"]) for r in rows]
    assert energies[:4] == [-0.5, 0.5, 1.5, 2.5]
    assert max(float(r["abs_diff"]) for r in rows) <= 1e-3
    assert sorted(report["artifacts"]) == ["alphas.csv", "potential.csv", "spectrum.csv",
                                           "states.csv"]


def test_csv_format(shifted_run):
    _, _, out = shifted_run
    raw = (out / "potential.csv").read_bytes()
    assert b"\r" not in raw
    first = raw.split(b"\n")[1].decode().split(",")
    assert first[0] == "-12"
    assert first[1] == "72"
    row = raw.split(b"\n")[2].decode().split(",")
    assert len(row[0].lstrip("-").replace(".", "")) <= 17


def test_inadmissible_nu(tmp_path):
    code, report, _ = run_cli(tmp_path, "run", {"factorizations": [{"epsilon": 0.0, "nu": 1.5}]})
    assert code == 2 and report["status"] == "inadmissible"
    check_schema(report)
    fatal = [f for f in report["admissibility"]["findings"] if f["fatal"]]
    assert fatal and fatal[0]["x"] < 0
    assert "x=" in report["error"]


def test_nodeless_pair_is_inadmissible(tmp_path):
    cfg = {"factorizations": [{"epsilon": 0.0, "nu": 0.3}, {"epsilon": -1.0, "nu": 0.2}]}
    code, report, _ = run_cli(tmp_path, "run", cfg)
    assert code == 2
    assert report["admissibility"]["findings"][-1]["kind"] == "zero_denominator"


def test_m2_run_flags_only_the_commutators(tmp_path):
    cfg = {"factorizations": [{"epsilon": 0.0, "nu": 0.3}, {"epsilon": -1.0, "nu": 2.0}],
           "checks": "all"}
    code, report, _ = run_cli(tmp_path, "run", cfg)
    assert code == 1 and report["status"] == "check_failed"
    failed = [k for k, c in report["checks"].items() if c["status"] == "fail"]
    assert failed == ["algebra"]
    m = report["checks"]["algebra"]["metrics"]
    assert m["ladder_commutator"] <= 5e-3 and m["annihilation_D"] <= 1e-3
    # with the commutator budget raised the same run is clean
    cfg["tolerances"] = {"commutator": 5e-2}
    code, report, _ = run_cli(tmp_path, "verify", cfg, name="relaxed")
    assert code == 0
    assert report["tolerances"]["effective"]["commutator"] == 5e-2


def test_short_sweep(tmp_path):
    code, report, out = run_cli(tmp_path, "sweep", None, "--epsilon", "0",
                                "--nu-min", "0.7", "--nu-max", "1.2", "--nu-step", "0.1")
    assert code == 0
    check_schema(report)
    rows = read_csv(out / "sweep.csv")
    assert [r["admissible"] for r in rows] == ["true", "true", "true", "false", "false", "false"]
    assert report["sweep"]["admissible_range"] == [0.7, 0.9]


def test_spectrum_identity_chain(tmp_path):
    code, report, out = run_cli(tmp_path, "spectrum", {"n_max": 5})
    assert code == 0 and report["artifacts"] == ["spectrum.csv"]
    rows = read_csv(out / "spectrum.csv")
    assert [float(r["energy"]) for r in rows] == [n + 0.5 for n in range(6)]
    assert all(r["provenance"] == f"oscillator:{i}" for i, r in enumerate(rows))


def test_build_is_byte_deterministic(tmp_path):
    cfg = {"grid": {"n_points": 2401}, "factorizations": [{"epsilon": 0.0, "nu": 0.5}]}
    a = run_cli(tmp_path, "build", cfg, name="a")[2]
    b = run_cli(tmp_path, "build", cfg, name="b")[2]
    for f in ("potential.csv", "alphas.csv", "spectrum.csv", "states.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


@pytest.mark.parametrize("cfg", [{"bogus": 1}, {"checks": ["nope"]},
                                 {"tolerances": {"speed": 1}}, {"n_max": -1},
                                 {"factorizations": [{"nu": 0.1}]},
                                 {"factorizations": [{"epsilon": 0.9}]}])
def test_invalid_config(tmp_path, cfg):
    code, report, _ = run_cli(tmp_path, "run", cfg)
    assert code == 2 and report["status"] == "invalid_config"
    check_schema(report)


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_numerical_failure(tmp_path):
    cfg = {"grid": {"x_min": -100, "x_max": 100, "n_points": 2001},
           "factorizations": [{"epsilon": 0.0, "nu": 0.5}]}
    code, report, _ = run_cli(tmp_path, "run", cfg)
    assert code == 3 and report["status"] == "numerical_failure"
    check_schema(report)


def test_parse_checks():
    assert parse_checks("all") == CHECKS
    assert parse_checks("spectrum, riccati") == ("riccati", "spectrum")
    with pytest.raises(ConfigError):
        parse_checks("riccati,fast")


def test_run_config_defaults():
    cfg = RunConfig.from_dict({})
    assert cfg.grid.n_points == 9601 and cfg.factorizations.m == 0
    assert cfg.tolerances == DEFAULT_TOLERANCES


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "susyosc", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0
    for sub in ("run", "build", "verify", "spectrum", "sweep"):
        assert sub in res.stdout


def test_human_output(tmp_path, capsys):
    out = tmp_path / "h"
    code = main(["verify", "--out", str(out), "--checks", "spectrum"])
    assert code == 0
    text = capsys.readouterr().out
    assert "spectrum" in text and "status: ok" in text
