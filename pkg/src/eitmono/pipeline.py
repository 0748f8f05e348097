"""End-to-end experiment pipeline: mesh, measurements, bounds, reconstruction.

Stages are timed and failures are re-raised tagged with the stage name;
artifact files are only written once every numerical stage has finished, and
anything partially written is removed on failure.  Wall-clock timings go to
a separate file so the main report stays byte-reproducible.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import imaging, ntd
from .config import ExperimentConfig
from .errors import EitError, PipelineError
from .fem import generate_mesh
from .geometry import PixelClass, build_partition, classify_partition
from .monotonicity import BoundsVector, compute_bounds, contrast_bound, write_bounds
from .ntd import CurrentBasis, add_noise, assemble_sensitivities, assemble_V
from .solver import (ReconstructionProblem, ReconstructionResult, solve_box_ls,
                     solve_spectral, solve_tikhonov)

OUTPUT_ROOT_ENV = "EITMONO_OUTPUT_ROOT"


@dataclass
class Report:
    config: dict
    v_frobenius: float
    presym_asymmetry: float
    delta_abs: float
    contrast_bound: float
    pixel_table: list[dict]               # index, class, beta, upper, a_hat
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float
    stage_seconds: dict = field(default_factory=dict)

    def deterministic_dict(self) -> dict:
        """Everything except wall-clock timings, for byte-stable serialization."""
        return {
            "config": self.config,
            "v_frobenius": self.v_frobenius,
            "presym_asymmetry": self.presym_asymmetry,
            "delta_abs": self.delta_abs,
            "contrast_bound": self.contrast_bound,
            "objective": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "kkt_residual": self.kkt_residual,
            "pixel_table": self.pixel_table,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.deterministic_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_timings(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("stage, seconds\n")
            for stage, sec in self.stage_seconds.items():
                fh.write(f"{stage}, {sec:.6f}\n")


@dataclass(frozen=True)
class ExperimentData:
    """Intermediate products of a run, for tests and follow-up analysis."""

    mesh: object
    basis: CurrentBasis
    V: ntd.MeasurementMatrix
    V_noisy: ntd.MeasurementMatrix
    partition: object
    classes: list[PixelClass]
    sensitivities: list
    bounds: BoundsVector
    result: ReconstructionResult


class _StageTimer:
    def __init__(self):
        self.seconds: dict[str, float] = {}

    def run(self, stage: str, fn):
        start = time.perf_counter()
        try:
            out = fn()
        except EitError as exc:
            raise PipelineError(stage, str(exc)) from exc
        except Exception as exc:
            raise PipelineError(stage, f"{type(exc).__name__}: {exc}") from exc
        self.seconds[stage] = time.perf_counter() - start
        return out


def run_experiment(config: ExperimentConfig, output_dir=None,
                   write_artifacts: bool = True) -> tuple[Report, ExperimentData]:
    """Run the full pipeline for one configuration.

    Returns the report and the intermediate data.  Artifacts are written to
    output_dir (default: config.output_dir, optionally re-rooted by the
    EITMONO_OUTPUT_ROOT environment variable).
    """
    config.validate()
    timer = _StageTimer()

    phantom = timer.run("config", config.phantom)
    basis = CurrentBasis(config.n1)

    mesh = timer.run("mesh", lambda: generate_mesh(
        config.mesh_refinement, phantom=phantom, scale=config.mesh_scale,
        sigma_samples=config.sigma_samples))

    V, asym = timer.run("forward", lambda: assemble_V(mesh, basis))

    V_noisy = timer.run("noise", lambda: add_noise(V, config.delta_rel, config.seed))

    partition = timer.run("partition", lambda: build_partition(
        config.partition_resolution))
    classes = timer.run("classify", lambda: classify_partition(
        partition, phantom, samples=config.classify_samples))

    sensitivities = timer.run("sensitivity", lambda: assemble_sensitivities(
        partition.pixels, basis, subdiv=config.quad_subdiv))

    a = contrast_bound(config.resolved_gamma_min())
    bounds = timer.run("bounds", lambda: compute_bounds(
        sensitivities, V_noisy, V_noisy.noise_level, a))

    def _solve() -> ReconstructionResult:
        stack = np.stack([S.entries for S in sensitivities])
        if config.comparison_mode == "no_beta":
            upper = np.full(len(sensitivities), a)
        elif config.comparison_mode == "no_a":
            upper = bounds.beta.copy()
        else:
            upper = bounds.effective_upper.copy()
        problem = ReconstructionProblem(sensitivities=stack,
                                        target=V_noisy.entries, upper=upper)
        if config.comparison_mode == "tikhonov":
            return solve_tikhonov(problem, lam=config.tikhonov_lambda)
        if config.solver == "spectral":
            return solve_spectral(problem)
        return solve_box_ls(problem, tol=config.solver_tol,
                            max_iter=config.solver_max_iter)

    result = timer.run("solve", _solve)

    report = Report(
        config=config.to_dict(),
        v_frobenius=V.frobenius(),
        presym_asymmetry=asym,
        delta_abs=V_noisy.noise_level,
        contrast_bound=a,
        pixel_table=[
            {"index": int(p.index), "class": cls.value,
             "beta": float(bounds.beta[i]),
             "upper": float(bounds.effective_upper[i]),
             "a_hat": float(result.coefficients[i])}
            for i, (p, cls) in enumerate(zip(partition.pixels, classes))
        ],
        objective=result.objective,
        iterations=result.iterations,
        converged=result.converged,
        kkt_residual=result.kkt_residual,
        stage_seconds=timer.seconds,
    )

    data = ExperimentData(mesh=mesh, basis=basis, V=V, V_noisy=V_noisy,
                          partition=partition, classes=classes,
                          sensitivities=sensitivities, bounds=bounds,
                          result=result)

    if write_artifacts:
        outdir = resolve_output_dir(config, output_dir)
        timer.run("artifacts", lambda: _write_artifacts(
            outdir, config, report, data, phantom))
        report.stage_seconds = timer.seconds
        report.write_timings(os.path.join(outdir, "timings.txt"))

    return report, data


def resolve_output_dir(config: ExperimentConfig, output_dir=None) -> str:
    outdir = output_dir if output_dir is not None else config.output_dir
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(outdir):
        outdir = os.path.join(root, outdir)
    return outdir


def _write_artifacts(outdir, config, report: Report, data: ExperimentData,
                     phantom) -> None:
    os.makedirs(outdir, exist_ok=True)
    written: list[str] = []

    def path(name: str) -> str:
        p = os.path.join(outdir, name)
        written.append(p)
        return p

    try:
        config.to_json(path("config.json"))
        report.to_json(path("report.json"))
        ntd.write_matrix(path("V.txt"), data.V.entries)
        ntd.write_matrix(path("V_delta.txt"), data.V_noisy.entries)
        write_bounds(path("bounds.csv"), data.bounds, data.classes)
        with open(path("coefficients.csv"), "w") as fh:
            fh.write("pixel_id, a_hat\n")
            for p, a in zip(data.partition.pixels, data.result.coefficients):
                fh.write(f"{p.index}, {float(a)!r}\n")
        imaging.render_image(data.partition, data.result.coefficients,
                             report.contrast_bound, path("recon.pgm"),
                             path("recon.csv"), canvas_size=config.canvas_size)
        imaging.save_figures(data.partition, data.result.coefficients,
                             report.contrast_bound, phantom,
                             path("recon.png"), path("truth.png"),
                             canvas_size=config.canvas_size)
        if config.dump_matrices:
            sensdir = os.path.join(outdir, "sensitivity")
            os.makedirs(sensdir, exist_ok=True)
            for S in data.sensitivities:
                p = os.path.join(sensdir, f"S_{S.pixel_index:04d}.txt")
                written.append(p)
                ntd.write_matrix(p, S.entries)
    except Exception:
        for p in written:
            if os.path.exists(p):
                os.remove(p)
        raise
