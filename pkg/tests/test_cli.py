"""Config validation, field materialization, runners, and output hygiene.

The determinism contract is byte-level: rerunning a config must reproduce
every data file exactly, with the manifest free to differ only in wall
time (and in the echoed output directory when the runs target different
places).
"""

import hashlib
import io
import json
import os

import numpy as np
import pytest

import betaplane.cli as cli
from betaplane.cli import ConfigError, ScenarioResult, build_field, parse_config, run
from betaplane.fieldops import ComplexField, Grid, write_field_csv


def test_defaults_and_dt_rule():
    cfg = parse_config(None, "evolve")
    assert cfg.profile == {"name": "couette", "params": {}}
    assert cfg.alpha == 1.0 and cfg.n == 256 and cfg.out == "out"
    # couette at beta 0 has stability limit 2.5, and 0.9 x 2.5 < t_final
    assert cfg.dt == pytest.approx(2.25, rel=1e-12)
    short = parse_config('{"t_final": 0.5}', "evolve")
    assert short.dt == 0.5


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config keys for spectrum: bogus"):
        parse_config('{"alpha": 1.0, "bogus": 2}', "spectrum")
    with pytest.raises(ConfigError, match="unknown config keys"):
        parse_config('{"t_final": 5.0}', "bvp")


def test_value_validation():
    with pytest.raises(ConfigError, match="alpha must be a number"):
        parse_config('{"alpha": "fast"}', "spectrum")
    with pytest.raises(ConfigError, match="alpha must be positive"):
        parse_config('{"alpha": -1.0}', "spectrum")
    with pytest.raises(ConfigError, match="n must be an integer"):
        parse_config('{"n": 2.5}', "spectrum")
    with pytest.raises(ConfigError, match="beta must be a number"):
        parse_config('{"beta": true}', "spectrum")
    with pytest.raises(ConfigError, match="c must be a pair"):
        parse_config('{"c": [1.0]}', "bvp")
    with pytest.raises(ConfigError, match="dt .* exceeds the stability bound"):
        parse_config('{"dt": 100.0}', "evolve")


def test_malformed_sources(tmp_path):
    with pytest.raises(ConfigError, match="malformed JSON"):
        parse_config("{not json", "spectrum")
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]\n")
    with pytest.raises(ConfigError, match="must be a JSON object"):
        parse_config(str(listing), "spectrum")
    with pytest.raises(ConfigError, match="config file not found"):
        parse_config(str(tmp_path / "missing.json"), "spectrum")


def test_profile_spec_validation():
    with pytest.raises(ConfigError, match="profile must be an object"):
        parse_config('{"profile": 5}', "spectrum")
    with pytest.raises(ConfigError, match="unknown profile keys: extra"):
        parse_config('{"profile": {"name": "couette", "extra": 1}}', "spectrum")


def test_verify_scenario_validation():
    with pytest.raises(ConfigError, match="verify needs a scenario"):
        parse_config(None, "verify")
    with pytest.raises(ConfigError, match="unknown scenario 'nope'") as err:
        parse_config('{"scenario": "nope"}', "verify")
    assert "couette-transport" in str(err.value)


def test_bvp_requires_c():
    with pytest.raises(ConfigError, match=r"bvp needs c as a \[re, im\] pair"):
        parse_config("{}", "bvp")


def test_overrides_win(monkeypatch):
    cfg = parse_config('{"n": 96}', "spectrum", {"n": 48, "out": None})
    assert cfg.n == 48 and cfg.out == "out"
    monkeypatch.setattr("sys.stdin", io.StringIO('{"n": 32}'))
    assert parse_config("-", "spectrum").n == 32


def test_build_field_validation():
    grid = Grid(32, 0.0, 1.0)
    with pytest.raises(ConfigError, match="data spec must be an object"):
        build_field("sine", grid, 1.0)
    with pytest.raises(ConfigError, match="unknown data kind"):
        build_field({"kind": "noise"}, grid, 1.0)
    with pytest.raises(ConfigError, match="unknown data keys: path"):
        build_field({"kind": "sine", "path": "x"}, grid, 1.0)
    with pytest.raises(ConfigError, match="triples"):
        build_field({"kind": "sine", "modes": [[1, 1.0]]}, grid, 1.0)
    with pytest.raises(ConfigError, match="positive integer"):
        build_field({"kind": "sine", "modes": [[0, 1.0, 0.0]]}, grid, 1.0)
    with pytest.raises(ConfigError, match="remove_discrete needs a profile"):
        build_field({"kind": "sine", "remove_discrete": True}, grid, 1.0)


def test_build_field_sine_and_file(tmp_path):
    grid = Grid(32, 0.0, 1.0)
    field = build_field({"kind": "sine", "modes": [[2, 0.5, -1.0]]}, grid, 1.0)
    expect = complex(0.5, -1.0) * np.sin(2 * np.pi * grid.nodes)
    assert np.max(np.abs(field.values - expect)) < 1e-15

    rng = np.random.default_rng(3)
    stored = ComplexField(grid, rng.standard_normal(33) + 1j * rng.standard_normal(33))
    path = tmp_path / "field.csv"
    write_field_csv(str(path), stored)
    loaded = build_field({"kind": "file", "path": str(path)}, grid, 1.0)
    assert np.array_equal(loaded.values, stored.values)


def test_build_field_curve_eigenmode():
    grid = Grid(64, -1.0, 1.0)
    alpha = np.sqrt(3.0) * np.pi / 2
    field = build_field({"kind": "curve-eigenmode", "curve": "gamma1",
                         "parameter": 0.0}, grid, alpha)
    # omega = -(phi'' - alpha^2 phi) = (alpha^2 + pi^2/4) cos(pi y / 2)
    expect = (alpha ** 2 + np.pi ** 2 / 4) * np.cos(np.pi * grid.nodes / 2)
    assert np.max(np.abs(field.values - expect)) < 1e-12


def test_verify_run_passes(tmp_path):
    cfg = parse_config(None, "verify", {"scenario": "helmholtz-kernel",
                                        "out": str(tmp_path)})
    status, manifest = run(cfg)
    assert status == 0
    assert manifest["pass"] is True
    assert manifest["tool"]["name"] == "betaplane"
    for entry in manifest["outputs"]:
        full = tmp_path / entry["path"]
        blob = full.read_bytes()
        assert len(blob) == entry["bytes"]
        assert hashlib.sha256(blob).hexdigest() == entry["sha256"]
    assert (tmp_path / "manifest.json").exists()


def test_verify_failure_exit_code(tmp_path, monkeypatch, capsys):
    monkeypatch.setitem(cli.SCENARIOS, "always-fails",
                        lambda out, workers: ScenarioResult(False, {"why": "test"}))
    status = cli.main(["verify", "always-fails", "--out", str(tmp_path)])
    assert status == 2
    captured = capsys.readouterr()
    assert captured.out.startswith("FAIL always-fails")
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["pass"] is False


def test_failed_run_cleans_outputs(tmp_path, capsys):
    config = json.dumps({"initial_data": {"kind": "file",
                                          "path": str(tmp_path / "absent.csv")},
                         "t_final": 0.1, "n": 32, "out": str(tmp_path / "run")})
    status = cli.main(["evolve", "--config", config])
    assert status == 1
    assert "error" in capsys.readouterr().err
    rundir = tmp_path / "run"
    assert not (rundir / "manifest.json").exists()
    assert os.listdir(rundir) == []


def test_repeat_runs_are_byte_identical(tmp_path):
    base = {"profile": {"name": "couette", "params": {}}, "alpha": 1.0,
            "beta": 0.0, "n": 64, "c": [0.0, 1.0]}
    manifests = []
    for sub in ("a", "b"):
        outdir = tmp_path / sub
        cfg = parse_config(json.dumps(dict(base, out=str(outdir))), "bvp")
        status, manifest = run(cfg)
        assert status == 0
        manifests.append(manifest)
    for name in ("phi.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    for doc in manifests:
        doc.pop("wall_time_s")
        doc["config"].pop("out")
    assert manifests[0] == manifests[1]


def test_atlas_csv_layout(tmp_path):
    config = json.dumps({"alpha_range": [1.5, 2.5], "beta_range": [-1.0, 1.0],
                         "n_alpha": 2, "n_beta": 2, "spectrum_n": 48,
                         "out": str(tmp_path)})
    cfg = parse_config(config, "atlas")
    status, manifest = run(cfg)
    assert status == 0
    lines = (tmp_path / "atlas.csv").read_text().splitlines()
    assert lines[0] == "alpha,beta,tag,growth_rate"
    assert len(lines) == 5
    assert all(line.split(",")[2] == "Gamma" for line in lines[1:])
    assert manifest["summary"]["n_points"] == 4
    assert (tmp_path / "summary.json").exists()


def test_n_flag_overrides_config(tmp_path, capsys):
    config = json.dumps({"n": 96, "out": str(tmp_path)})
    status = cli.main(["spectrum", "--config", config, "--n", "48"])
    assert status == 0
    assert "wrote" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["grid"]["n"] == 48
    assert manifest["config"]["n"] == 48


def test_verify_positional_scenario(tmp_path, capsys):
    status = cli.main(["verify", "helmholtz-kernel", "--out", str(tmp_path)])
    assert status == 0
    out = capsys.readouterr().out
    assert out.startswith("PASS helmholtz-kernel")
    assert "worst_identity_error" in out


def test_config_error_exit_code(capsys):
    status = cli.main(["spectrum", "--config", '{"alpha": -2.0}'])
    assert status == 1
    assert "config error" in capsys.readouterr().err
