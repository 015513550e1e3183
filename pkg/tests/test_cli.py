import json

import pytest

from casimirlab import cli
from casimirlab.cli import RunConfig, main, resolve_config


def run_cli(args, tmp_path, capsys):
    code = main(args + ["--output-dir", str(tmp_path)])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_casimir_command(tmp_path, capsys):
    code, out, _ = run_cli(["casimir", "--interval", "1", "--bc", "dirichlet,dirichlet"],
                           tmp_path, capsys)
    assert code == 0
    assert "E_ren = -0.13089969" in out
    doc = json.loads((tmp_path / "casimir.json").read_text())
    assert doc["result"]["E_ren"] == pytest.approx(-0.1309, abs=1e-6)
    assert doc["config"]["bc"] == "dirichlet,dirichlet"


def test_coeffs_check_theorem(tmp_path, capsys):
    code, out, _ = run_cli(["coeffs", "--check-theorem", "--d", "1", "--bc",
                            "robin:-1,robin:-1"], tmp_path, capsys)
    assert code == 0
    assert "cross-validation: PASS" in out
    assert "f_2" in out


def test_structure_command(tmp_path, capsys):
    code, out, _ = run_cli(["structure", "--d", "3", "--curvature", "--target", "energy"],
                           tmp_path, capsys)
    assert code == 0
    assert "ln t" in out or "t^-4" in out
    assert (tmp_path / "structure.json").exists()


def test_reproducible_json_is_byte_identical(tmp_path, capsys):
    args = ["spectrum", "--interval", "2", "--N", "50", "--reproducible"]
    blobs = []
    for _ in range(2):
        run_cli(args + ["--csv"], tmp_path, capsys)
        blobs.append(((tmp_path / "spectrum.json").read_bytes(),
                      (tmp_path / "spectrum.csv").read_bytes()))
    assert blobs[0] == blobs[1]
    assert "created" not in json.loads(blobs[0][0])


def test_timestamp_without_reproducible(tmp_path, capsys):
    run_cli(["spectrum", "--N", "10"], tmp_path, capsys)
    assert "created" in json.loads((tmp_path / "spectrum.json").read_text())


def test_json_flag(tmp_path, capsys):
    code, out, _ = run_cli(["trace", "--N", "2000", "--kind", "heat", "--window",
                            "0.01,0.1", "--n-points", "8", "--json", "--csv"],
                           tmp_path, capsys)
    doc = json.loads(out)
    assert code == 0 and doc["task"] == "trace"
    assert (tmp_path / "trace_heat.csv").exists()


def test_fit_command(tmp_path, capsys):
    code, out, _ = run_cli(["fit", "--N", "10000", "--kind", "cylinder", "--window",
                            "0.001,0.01", "--terms=-1,0,1,3,5"], tmp_path, capsys)
    assert code == 0
    assert "0.3183098861" in out
    assert "-0.4999999999" in out


def test_riesz_command(tmp_path, capsys):
    code, out, _ = run_cli(["riesz", "--alpha", "1", "--csv"], tmp_path, capsys)
    assert code == 0 and "s=1" in out
    assert (tmp_path / "riesz_lambda.csv").exists()


def test_density_and_study(tmp_path, capsys):
    code, out, _ = run_cli(["density", "--x", "0.3,0.5", "--csv"], tmp_path, capsys)
    assert code == 0 and "-0.1308996" in out
    code, out, _ = run_cli(["density", "--halfline", "robin:-1", "--xi", "0.25"],
                           tmp_path, capsys)
    assert code == 0 and "x^-1" in out
    code, _, _ = run_cli(["study", "--t-grid", "0.05,0.5,4", "--csv"], tmp_path, capsys)
    assert code == 0 and (tmp_path / "study.csv").exists()


def test_plates_command(tmp_path, capsys):
    code, out, _ = run_cli(["casimir", "--plates", "--d", "3"], tmp_path, capsys)
    assert code == 0 and "-0.00685389" in out


def test_config_file_and_override(tmp_path, capsys):
    ini = tmp_path / "run.ini"
    ini.write_text("[geometry]\nlength = 2.0\nbc = neumann,neumann\n[numerics]\nN = 4000\n")
    cfg = resolve_config(["casimir", "--config", str(ini), "--N", "5000"])
    assert cfg.length == 2.0 and cfg.bc == "neumann,neumann" and cfg.N == 5000


def test_ini_round_trip():
    cfg = RunConfig(task="riesz", d=2, box="1,2", alpha=3, xi=0.25, reproducible=True)
    back = RunConfig.from_ini(cfg.to_ini())
    assert back == cfg
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_unknown_key_rejected(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[geometry]\nlenght = 2.0\n")
    code, _, err = run_cli(["casimir", "--config", str(ini)], tmp_path, capsys)
    assert code == 1 and "lenght" in err
    with pytest.raises(cli.ConfigError):
        RunConfig.from_dict({"task": "casimir", "Nn": 3})


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run_cli(["casimir", "--bc", "sticky,dirichlet"], tmp_path, capsys)[0] == 1
    assert run_cli(["casimir", "--frobnicate"], tmp_path, capsys)[0] == 1
    assert run_cli(["fit", "--N", "100"], tmp_path, capsys)[0] == 1
    assert run_cli(["trace", "--window", "1"], tmp_path, capsys)[0] == 1


def test_certification_failure_exits_two(tmp_path, capsys):
    code, _, err = run_cli(["coeffs", "--N", "30"], tmp_path, capsys)
    assert code == 2 and "certification" in err


def test_env_output_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("CASIMIRLAB_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["structure", "--d", "1"]) == 0
    assert (tmp_path / "env" / "structure.json").exists()
