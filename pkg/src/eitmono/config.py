"""Experiment configuration: schema, validation, JSON round-trip, presets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError
from .geometry import Disk, Ellipse, Phantom, Rectangle

SOLVERS = ("frobenius", "spectral")
COMPARISON_MODES = ("none", "no_beta", "no_a", "tikhonov")


@dataclass
class ExperimentConfig:
    """Everything needed to rerun one experiment deterministically."""

    shapes: list[dict] = field(default_factory=list)
    n1: int = 16                      # current pairs; matrix size is 2 * n1
    mesh_refinement: int = 64         # rings of the polar mesh
    mesh_scale: float = 1.0           # angular density multiplier
    sigma_samples: int = 16            # per-edge subdivisions for element sigma
    partition_resolution: int = 16    # M of the M x M pixel grid
    classify_samples: int = 8         # per-axis samples for pixel classification
    quad_subdiv: int = 16             # per-axis sub-cells for pixel quadrature
    delta_rel: float = 0.0            # relative Frobenius noise level
    seed: int = 1
    gamma_min: float | None = None    # None: smallest contrast in the phantom
    solver: str = "frobenius"
    solver_tol: float = 1e-8
    solver_max_iter: int = 50000
    comparison_mode: str = "none"
    tikhonov_lambda: float = 1e-5
    canvas_size: int = 256            # raster size of the image artifact
    dump_matrices: bool = False       # also dump every sensitivity matrix
    output_dir: str = "out"

    def validate(self) -> None:
        if self.n1 < 1:
            raise ConfigError(f"field n1: must be >= 1, got {self.n1}")
        if self.mesh_refinement < 1:
            raise ConfigError(
                f"field mesh_refinement: must be >= 1, got {self.mesh_refinement}")
        if self.mesh_scale <= 0:
            raise ConfigError(f"field mesh_scale: must be positive, got {self.mesh_scale}")
        if self.sigma_samples < 1:
            raise ConfigError(
                f"field sigma_samples: must be >= 1, got {self.sigma_samples}")
        if self.partition_resolution < 2:
            raise ConfigError(
                f"field partition_resolution: must be >= 2, got {self.partition_resolution}")
        if self.classify_samples < 4:
            raise ConfigError(
                f"field classify_samples: must be >= 4, got {self.classify_samples}")
        if self.quad_subdiv < 1:
            raise ConfigError(f"field quad_subdiv: must be >= 1, got {self.quad_subdiv}")
        if self.delta_rel < 0:
            raise ConfigError(f"field delta_rel: must be >= 0, got {self.delta_rel}")
        if self.gamma_min is not None and self.gamma_min <= 0:
            raise ConfigError(f"field gamma_min: must be positive, got {self.gamma_min}")
        if self.solver not in SOLVERS:
            raise ConfigError(
                f"field solver: must be one of {SOLVERS}, got {self.solver!r}")
        if self.solver_tol <= 0:
            raise ConfigError(f"field solver_tol: must be positive, got {self.solver_tol}")
        if self.solver_max_iter < 1:
            raise ConfigError(
                f"field solver_max_iter: must be >= 1, got {self.solver_max_iter}")
        if self.comparison_mode not in COMPARISON_MODES:
            raise ConfigError(
                f"field comparison_mode: must be one of {COMPARISON_MODES}, "
                f"got {self.comparison_mode!r}")
        if self.tikhonov_lambda <= 0:
            raise ConfigError(
                f"field tikhonov_lambda: must be positive, got {self.tikhonov_lambda}")
        if self.canvas_size < 16:
            raise ConfigError(f"field canvas_size: must be >= 16, got {self.canvas_size}")
        self.phantom()  # validates the shape list

    def phantom(self) -> Phantom:
        return Phantom([_shape_from_dict(i, s) for i, s in enumerate(self.shapes)])

    def resolved_gamma_min(self) -> float:
        if self.gamma_min is not None:
            return self.gamma_min
        return self.phantom().min_contrast()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must contain a JSON object")
        return cls.from_dict(data)


def _shape_from_dict(index: int, s: dict):
    if not isinstance(s, dict) or "kind" not in s:
        raise ConfigError(f"shape {index}: each shape needs a 'kind' field")
    kind = s["kind"]
    try:
        if kind == "disk":
            return Disk(center=tuple(s["center"]), radius=float(s["radius"]),
                        contrast=float(s["contrast"]))
        if kind == "rectangle":
            return Rectangle(lower_left=tuple(s["lower_left"]),
                             upper_right=tuple(s["upper_right"]),
                             contrast=float(s["contrast"]))
        if kind == "ellipse":
            return Ellipse(center=tuple(s["center"]), semi_x=float(s["semi_x"]),
                           semi_y=float(s["semi_y"]), contrast=float(s["contrast"]))
    except KeyError as exc:
        raise ConfigError(f"shape {index}: missing field {exc}") from exc
    raise ConfigError(f"shape {index}: unknown kind {kind!r}")


def shape_to_dict(shape) -> dict:
    if isinstance(shape, Disk):
        return {"kind": "disk", "center": list(shape.center),
                "radius": shape.radius, "contrast": shape.contrast}
    if isinstance(shape, Rectangle):
        return {"kind": "rectangle", "lower_left": list(shape.lower_left),
                "upper_right": list(shape.upper_right), "contrast": shape.contrast}
    if isinstance(shape, Ellipse):
        return {"kind": "ellipse", "center": list(shape.center),
                "semi_x": shape.semi_x, "semi_y": shape.semi_y,
                "contrast": shape.contrast}
    raise ConfigError(f"unknown shape type {type(shape).__name__}")


def preset(name: str) -> ExperimentConfig:
    """Named experiment presets.

    figure1: three inclusions (ball, rectangle, ellipse) with contrasts
    3, 1, 2 and 0.1% noise.  figure3: small centered ball, near-exact data.
    concentric: centered ball for validation against the separation-of-
    variables solution.
    """
    if name == "figure1":
        cfg = ExperimentConfig(
            shapes=[
                {"kind": "disk", "center": [-0.4, -0.5], "radius": 0.1, "contrast": 3.0},
                {"kind": "rectangle", "lower_left": [0.3, -0.65],
                 "upper_right": [0.45, -0.4], "contrast": 1.0},
                {"kind": "ellipse", "center": [0.1, 0.4], "semi_x": 0.3,
                 "semi_y": 0.1, "contrast": 2.0},
            ],
            delta_rel=1e-3,
            output_dir="out/figure1",
        )
    elif name == "figure3":
        cfg = ExperimentConfig(
            shapes=[
                {"kind": "disk", "center": [0.0, 0.0], "radius": 0.1, "contrast": 3.0},
            ],
            delta_rel=1e-11,
            output_dir="out/figure3",
        )
    elif name == "concentric":
        cfg = ExperimentConfig(
            shapes=[
                {"kind": "disk", "center": [0.0, 0.0], "radius": 0.3, "contrast": 1.0},
            ],
            n1=8,
            delta_rel=0.0,
            output_dir="out/concentric",
        )
    else:
        raise ConfigError(f"unknown preset {name!r}; "
                          f"expected one of 'figure1', 'figure3', 'concentric'")
    cfg.validate()
    return cfg
