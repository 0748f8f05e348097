import json
import os

import numpy as np
import pytest

from eitmono import pipeline
from eitmono.config import ExperimentConfig
from eitmono.errors import PipelineError


def fast_config(**overrides):
    cfg = ExperimentConfig(
        shapes=[{"kind": "disk", "center": [0.2, 0.1], "radius": 0.25,
                 "contrast": 1.0}],
        n1=2, mesh_refinement=8, partition_resolution=4, classify_samples=4,
        quad_subdiv=4, canvas_size=32, solver_tol=1e-6, delta_rel=1e-3)
    for key, value in overrides.items():
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


@pytest.fixture(scope="module")
def fast_run():
    report, data = pipeline.run_experiment(fast_config(), write_artifacts=False)
    return report, data


def test_report_structure(fast_run):
    report, data = fast_run
    assert report.v_frobenius == pytest.approx(data.V.frobenius())
    assert report.delta_abs == pytest.approx(1e-3 * data.V.frobenius())
    assert report.contrast_bound == pytest.approx(0.5)
    table = report.pixel_table
    assert len(table) == len(data.partition.pixels)
    assert [row["index"] for row in table] == [p.index for p in data.partition.pixels]
    for row in table:
        assert row["class"] in ("inside", "outside", "boundary")
        assert row["upper"] == pytest.approx(min(row["beta"], 0.5))
        assert 0.0 <= row["a_hat"] <= row["upper"] + 1e-12
    # every numerical stage is timed
    for stage in ("mesh", "forward", "noise", "partition", "classify",
                  "sensitivity", "bounds", "solve"):
        assert report.stage_seconds[stage] >= 0.0


def test_coefficients_respect_effective_box(fast_run):
    report, data = fast_run
    upper = data.bounds.effective_upper
    assert np.all(data.result.coefficients <= upper + 1e-12)
    assert np.all(data.result.coefficients >= 0.0)
    assert report.objective == pytest.approx(data.result.objective)


def test_report_json_is_deterministic(tmp_path):
    cfg = fast_config()
    r1, _ = pipeline.run_experiment(cfg, write_artifacts=False)
    r2, _ = pipeline.run_experiment(cfg, write_artifacts=False)
    p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
    r1.to_json(p1)
    r2.to_json(p2)
    assert p1.read_bytes() == p2.read_bytes()
    # timings are wall-clock, never part of the byte-stable report
    assert json.loads(p1.read_text()) == r1.deterministic_dict()
    assert "stage_seconds" not in json.loads(p1.read_text())


def test_timings_file(tmp_path, fast_run):
    report, _ = fast_run
    path = tmp_path / "timings.txt"
    report.write_timings(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "stage, seconds"
    assert len(lines) == 1 + len(report.stage_seconds)


def test_artifact_directory_contents(tmp_path):
    outdir = tmp_path / "run"
    report, _ = pipeline.run_experiment(fast_config(), output_dir=str(outdir))
    names = sorted(os.listdir(outdir))
    assert names == ["V.txt", "V_delta.txt", "bounds.csv", "coefficients.csv",
                     "config.json", "recon.csv", "recon.pgm", "recon.png",
                     "report.json", "timings.txt", "truth.png"]
    assert "artifacts" in report.stage_seconds


def test_dump_matrices_writes_sensitivities(tmp_path):
    outdir = tmp_path / "run"
    cfg = fast_config(dump_matrices=True)
    _, data = pipeline.run_experiment(cfg, output_dir=str(outdir))
    sens = sorted(os.listdir(outdir / "sensitivity"))
    assert len(sens) == len(data.partition.pixels)
    assert sens[0] == f"S_{data.partition.pixels[0].index:04d}.txt"


def test_failed_artifact_stage_cleans_up(tmp_path, monkeypatch):
    outdir = tmp_path / "run"

    def boom(*args, **kwargs):
        raise OSError("disk full")

    monkeypatch.setattr(pipeline.imaging, "render_image", boom)
    with pytest.raises(PipelineError, match="stage 'artifacts'"):
        pipeline.run_experiment(fast_config(), output_dir=str(outdir))
    # everything written before the failure is rolled back
    assert os.listdir(outdir) == []


def test_resolve_output_dir(monkeypatch):
    cfg = fast_config(output_dir="rel/run")
    monkeypatch.delenv(pipeline.OUTPUT_ROOT_ENV, raising=False)
    assert pipeline.resolve_output_dir(cfg) == "rel/run"
    assert pipeline.resolve_output_dir(cfg, "other") == "other"
    monkeypatch.setenv(pipeline.OUTPUT_ROOT_ENV, "/tmp/root")
    assert pipeline.resolve_output_dir(cfg) == "/tmp/root/rel/run"
    assert pipeline.resolve_output_dir(cfg, "/abs/run") == "/abs/run"


def test_comparison_modes_widen_the_box():
    # dropping either bound family enlarges the feasible set, so the misfit
    # cannot get worse; tikhonov drops constraints entirely
    base = pipeline.run_experiment(fast_config(), write_artifacts=False)[0]
    slack = 1e-9 * (1.0 + base.objective)
    for mode in ("no_beta", "no_a"):
        rep = pipeline.run_experiment(fast_config(comparison_mode=mode),
                                      write_artifacts=False)[0]
        assert rep.objective <= base.objective + slack
    tik = pipeline.run_experiment(fast_config(comparison_mode="tikhonov"),
                                  write_artifacts=False)[0]
    assert tik.iterations == 1 and tik.converged


def test_spectral_solver_path():
    rep, data = pipeline.run_experiment(fast_config(solver="spectral"),
                                        write_artifacts=False)
    assert np.isnan(rep.kkt_residual)
    assert np.all(data.result.coefficients <= data.bounds.effective_upper + 1e-12)


def test_pipeline_wraps_stage_failures(monkeypatch):
    def boom(*args, **kwargs):
        raise ValueError("singular")

    monkeypatch.setattr(pipeline, "assemble_V", boom)
    with pytest.raises(PipelineError, match="stage 'forward'") as excinfo:
        pipeline.run_experiment(fast_config(), write_artifacts=False)
    assert excinfo.value.stage == "forward"
