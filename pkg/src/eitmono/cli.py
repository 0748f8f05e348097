"""Command-line interface.

Subcommands: run an experiment from a JSON config, emit a named preset
config, validate a config, or check the forward solver against the
concentric-disk closed form.  Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ExperimentConfig, preset
from .errors import ConfigError, EitError, NumericalError, PipelineError
from .fem import generate_mesh
from .geometry import Disk
from .ntd import CurrentBasis, analytic_concentric, assemble_V, homogeneous_eigenvalue
from .pipeline import resolve_output_dir, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(path: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.from_json(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    report, _ = run_experiment(cfg, output_dir=args.out)
    outdir = resolve_output_dir(cfg, args.out)
    print(f"wrote artifacts to {outdir}")
    print(f"objective {report.objective!r}, iterations {report.iterations}, "
          f"converged {report.converged}")
    return EXIT_OK


def _cmd_preset(args) -> int:
    cfg = preset(args.name)
    if args.out:
        cfg.to_json(args.out)
        print(f"wrote preset '{args.name}' to {args.out}")
    else:
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    cfg.validate()
    print(f"config ok: {args.config}")
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    cfg = _load_config(args.config)
    shapes = cfg.phantom().shapes
    if len(shapes) != 1 or not isinstance(shapes[0], Disk) \
            or shapes[0].center != (0.0, 0.0):
        raise ConfigError("oracle-check needs a phantom with a single "
                          "disk centered at the origin")
    ball = shapes[0]
    sigma1 = 1.0 + ball.contrast
    basis = CurrentBasis(cfg.n1)
    mesh = generate_mesh(cfg.mesh_refinement, phantom=cfg.phantom(),
                         scale=cfg.mesh_scale, sigma_samples=cfg.sigma_samples)
    V, asym = assemble_V(mesh, basis)
    print(f"mesh rings {cfg.mesh_refinement}, currents {basis.size}, "
          f"pre-symmetrization asymmetry {asym:.3e}")
    print("order  kind  diagonal      analytic      rel_error")
    worst = 0.0
    for col, (j, kind) in enumerate(basis.members):
        expected = homogeneous_eigenvalue(j) - analytic_concentric(
            ball.radius, sigma1, j)
        got = V.entries[col, col]
        rel = abs(got - expected) / abs(expected)
        worst = max(worst, rel)
        print(f"{j:5d}  {kind:4s}  {got:.6e}  {expected:.6e}  {rel:.3e}")
    print(f"worst relative diagonal error: {worst:.3e}")
    if not worst < 1.0:
        raise NumericalError("forward solver disagrees wildly with the closed form")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eitmono",
        description="Linearized EIT on the unit disk: simulation and "
                    "monotonicity-constrained reconstruction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config", help="path to the experiment config")
    p_run.add_argument("--out", help="output directory override")
    p_run.set_defaults(fn=_cmd_run)

    p_preset = sub.add_parser("preset", help="emit a named preset config")
    p_preset.add_argument("name", help="figure1, figure3, or concentric")
    p_preset.add_argument("--out", help="write the config to this path")
    p_preset.set_defaults(fn=_cmd_preset)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config", help="path to the experiment config")
    p_val.set_defaults(fn=_cmd_validate)

    p_oracle = sub.add_parser(
        "oracle-check",
        help="compare the forward solver with the concentric-disk closed form")
    p_oracle.add_argument("config", help="config with a single centered disk")
    p_oracle.set_defaults(fn=_cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        cause = exc.__cause__
        if isinstance(cause, ConfigError):
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NumericalError, EitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
