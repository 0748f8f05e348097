import json

import pytest

from eitmono import cli
from eitmono.config import ExperimentConfig, preset, shape_to_dict
from eitmono.errors import ConfigError, NumericalError, PipelineError
from eitmono.geometry import Disk, Ellipse, Rectangle


def fast_config(**overrides):
    cfg = ExperimentConfig(
        shapes=[{"kind": "disk", "center": [0.0, 0.0], "radius": 0.3,
                 "contrast": 1.0}],
        n1=2, mesh_refinement=8, partition_resolution=4, classify_samples=4,
        quad_subdiv=4, canvas_size=32, solver_tol=1e-6)
    for key, value in overrides.items():
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


def test_default_config_is_valid():
    cfg = ExperimentConfig()
    cfg.validate()
    assert len(cfg.phantom().shapes) == 0
    with pytest.raises(ConfigError, match="minimum contrast undefined"):
        cfg.resolved_gamma_min()


@pytest.mark.parametrize("field,value", [
    ("n1", 0),
    ("mesh_refinement", 0),
    ("mesh_scale", 0.0),
    ("sigma_samples", 0),
    ("partition_resolution", 1),
    ("classify_samples", 3),
    ("quad_subdiv", 0),
    ("delta_rel", -0.1),
    ("gamma_min", 0.0),
    ("solver", "newton"),
    ("solver_tol", 0.0),
    ("solver_max_iter", 0),
    ("comparison_mode", "ablate"),
    ("tikhonov_lambda", 0.0),
    ("canvas_size", 8),
])
def test_validate_rejects_bad_field(field, value):
    cfg = ExperimentConfig()
    setattr(cfg, field, value)
    with pytest.raises(ConfigError, match=f"field {field}"):
        cfg.validate()


def test_from_dict_rejects_unknown_fields():
    with pytest.raises(ConfigError, match="unknown config fields"):
        ExperimentConfig.from_dict({"n1": 4, "refinement": 8})


def test_json_round_trip(tmp_path):
    cfg = preset("figure1")
    path = tmp_path / "cfg.json"
    cfg.to_json(path)
    back = ExperimentConfig.from_json(path)
    assert back.to_dict() == cfg.to_dict()


def test_from_json_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        ExperimentConfig.from_json(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]\n")
    with pytest.raises(ConfigError, match="JSON object"):
        ExperimentConfig.from_json(arr)


def test_shape_dict_errors():
    with pytest.raises(ConfigError, match="needs a 'kind'"):
        ExperimentConfig(shapes=[{"radius": 0.1}]).phantom()
    with pytest.raises(ConfigError, match="unknown kind"):
        ExperimentConfig(shapes=[{"kind": "triangle"}]).phantom()
    with pytest.raises(ConfigError, match="missing field"):
        ExperimentConfig(shapes=[{"kind": "disk", "center": [0, 0],
                                  "contrast": 1.0}]).phantom()


def test_shape_to_dict_round_trip():
    shapes = [Disk((0.1, -0.2), 0.3, 2.0),
              Rectangle((-0.7, -0.5), (-0.5, -0.3), 1.0),
              Ellipse((0.0, 0.3), 0.2, 0.1, 3.0)]
    cfg = ExperimentConfig(shapes=[shape_to_dict(s) for s in shapes])
    assert list(cfg.phantom().shapes) == shapes
    with pytest.raises(ConfigError, match="unknown shape type"):
        shape_to_dict("disk")


def test_presets():
    fig1 = preset("figure1")
    assert len(fig1.shapes) == 3
    assert fig1.delta_rel == 1e-3
    assert fig1.resolved_gamma_min() == 1.0
    assert preset("concentric").n1 == 8
    assert preset("figure3").delta_rel == 1e-11
    with pytest.raises(ConfigError, match="unknown preset"):
        preset("figure2")


def test_resolved_gamma_min_override():
    cfg = preset("figure1")
    cfg.gamma_min = 0.5
    assert cfg.resolved_gamma_min() == 0.5


def test_cli_preset_stdout(capsys):
    assert cli.main(["preset", "concentric"]) == cli.EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["n1"] == 8


def test_cli_preset_to_file(tmp_path, capsys):
    out = tmp_path / "cfg.json"
    assert cli.main(["preset", "figure1", "--out", str(out)]) == cli.EXIT_OK
    assert ExperimentConfig.from_json(out).delta_rel == 1e-3


def test_cli_validate(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    fast_config().to_json(path)
    assert cli.main(["validate", str(path)]) == cli.EXIT_OK
    assert "config ok" in capsys.readouterr().out


def test_cli_validate_bad_config(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"n1": 0}) + "\n")
    assert cli.main(["validate", str(path)]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_cli_missing_config_file(capsys):
    assert cli.main(["validate", "/nonexistent/cfg.json"]) == cli.EXIT_CONFIG
    assert "not found" in capsys.readouterr().err


def test_cli_unknown_preset(capsys):
    assert cli.main(["preset", "figure9"]) == cli.EXIT_CONFIG
    assert "unknown preset" in capsys.readouterr().err


def test_cli_oracle_check(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    fast_config().to_json(path)
    assert cli.main(["oracle-check", str(path)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "worst relative diagonal error" in out


def test_cli_oracle_check_needs_centered_disk(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    preset("figure1").to_json(path)
    assert cli.main(["oracle-check", str(path)]) == cli.EXIT_CONFIG
    assert "single" in capsys.readouterr().err


def test_cli_run_writes_artifacts(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    fast_config().to_json(path)
    out = tmp_path / "run"
    assert cli.main(["run", str(path), "--out", str(out)]) == cli.EXIT_OK
    for name in ("config.json", "report.json", "V.txt", "V_delta.txt",
                 "bounds.csv", "coefficients.csv", "recon.pgm", "recon.csv",
                 "recon.png", "truth.png", "timings.txt"):
        assert (out / name).exists(), name
    assert "wrote artifacts" in capsys.readouterr().out


def test_cli_output_root_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("EITMONO_OUTPUT_ROOT", str(tmp_path))
    path = tmp_path / "cfg.json"
    cfg = fast_config(output_dir="nested/run")
    cfg.to_json(path)
    assert cli.main(["run", str(path)]) == cli.EXIT_OK
    assert (tmp_path / "nested" / "run" / "report.json").exists()


def test_cli_exit_code_mapping(tmp_path, monkeypatch, capsys):
    path = tmp_path / "cfg.json"
    fast_config().to_json(path)

    def numerical_boom(cfg, output_dir=None):
        err = PipelineError("solve", "diverged")
        err.__cause__ = NumericalError("diverged")
        raise err

    monkeypatch.setattr(cli, "run_experiment", numerical_boom)
    assert cli.main(["run", str(path)]) == cli.EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err

    def config_boom(cfg, output_dir=None):
        err = PipelineError("config", "bad shape")
        err.__cause__ = ConfigError("bad shape")
        raise err

    monkeypatch.setattr(cli, "run_experiment", config_boom)
    assert cli.main(["run", str(path)]) == cli.EXIT_CONFIG
